"""Second-order spatial derivatives and parameter gradients for small dense nets.

Two pieces cooperate here:

* ``Jet2`` carries a field value together with its first and second partial
  derivatives w.r.t. the two spatial inputs, propagated forward through
  affine layers and activations (chain rule for 2-jets).
* ``ParamTape`` / ``Node`` record every elementary array operation of a loss
  evaluation so the gradient w.r.t. all network parameters can be
  accumulated in reverse order.

Slots of a ``Jet2`` may be plain floats/arrays (inference) or ``Node``
instances (training); all formulas below are written generically so the
same code serves both paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonFiniteError(FloatingPointError):
    """Raised when a NaN/Inf shows up in a value that must stay finite."""


def value_of(x):
    """Underlying numeric value of ``x`` (unwraps Node, passes arrays through)."""
    return x.value if isinstance(x, Node) else x


def check_finite(x, where=""):
    """Raise NonFiniteError if ``x`` (Node, array, or scalar) is not all finite."""
    v = value_of(x)
    # the sum of an array is non-finite iff some entry is (one cheap pass)
    total = v if np.ndim(v) == 0 else np.sum(v)
    if not np.isfinite(total):
        raise NonFiniteError(f"non-finite value encountered{' in ' + where if where else ''}")
    return x


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape == shape:
        return grad
    # sum over prepended axes
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class ParamTape:
    """Recorded sequence of elementary operations of one loss evaluation.

    Nodes are appended in execution order, so the list itself is a valid
    topological order: reverse accumulation simply walks it backwards.
    Parameter leaves are registered explicitly and define the layout of the
    gradient vector returned by :func:`param_gradient`.
    """

    def __init__(self):
        self.nodes = []
        self.leaves = []

    def __len__(self):
        return len(self.nodes)

    def _register(self, node):
        node.index = len(self.nodes)
        self.nodes.append(node)

    def leaf(self, value):
        """Register ``value`` as a differentiable parameter leaf."""
        node = Node(self, np.asarray(value, dtype=float))
        self.leaves.append(node)
        return node

    def constant(self, value):
        """Wrap a value that participates in ops but carries no gradient."""
        return Node(self, np.asarray(value, dtype=float))

    def replay(self):
        """Re-execute every recorded forward op in order; returns the tape.

        Values are recomputed in place from the (unchanged) leaves, which
        must reproduce every node value bit-identically.
        """
        for node in self.nodes:
            if node.fwd is not None:
                node.value = node.fwd()
        return self


class Node:
    """Array-valued variable recorded on a ParamTape."""

    # make numpy defer binary ops to our reflected operators
    __array_ufunc__ = None
    __slots__ = ("tape", "value", "parents", "backfns", "fwd", "index")

    def __init__(self, tape, value, parents=(), backfns=(), fwd=None):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.backfns = backfns
        self.fwd = fwd
        tape._register(self)

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f"Node(shape={np.shape(self.value)})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Node):
            return Node(
                self.tape, self.value + other.value, (self, other),
                (lambda g: _unbroadcast(g, np.shape(self.value)),
                 lambda g: _unbroadcast(g, np.shape(other.value))),
                fwd=lambda: self.value + other.value)
        c = other
        return Node(self.tape, self.value + c, (self,),
                    (lambda g: _unbroadcast(g, np.shape(self.value)),),
                    fwd=lambda: self.value + c)

    __radd__ = __add__

    def __neg__(self):
        return Node(self.tape, -self.value, (self,), (lambda g: -g,),
                    fwd=lambda: -self.value)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Node):
            return Node(
                self.tape, self.value * other.value, (self, other),
                (lambda g: _unbroadcast(g * other.value, np.shape(self.value)),
                 lambda g: _unbroadcast(g * self.value, np.shape(other.value))),
                fwd=lambda: self.value * other.value)
        c = other
        return Node(self.tape, self.value * c, (self,),
                    (lambda g: _unbroadcast(g * c, np.shape(self.value)),),
                    fwd=lambda: self.value * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Node):
            return Node(
                self.tape, self.value / other.value, (self, other),
                (lambda g: _unbroadcast(g / other.value, np.shape(self.value)),
                 lambda g: _unbroadcast(-g * self.value / other.value ** 2,
                                        np.shape(other.value))),
                fwd=lambda: self.value / other.value)
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        # other / self with other a constant
        c = other
        return Node(self.tape, c / self.value, (self,),
                    (lambda g: _unbroadcast(-g * c / self.value ** 2,
                                            np.shape(self.value)),),
                    fwd=lambda: c / self.value)

    def __pow__(self, p):
        if not np.isscalar(p):
            raise TypeError("only scalar exponents are supported")
        return Node(self.tape, self.value ** p, (self,),
                    (lambda g: _unbroadcast(g * p * self.value ** (p - 1),
                                            np.shape(self.value)),),
                    fwd=lambda: self.value ** p)

    def __matmul__(self, other):
        if isinstance(other, Node):
            return Node(
                self.tape, self.value @ other.value, (self, other),
                (lambda g: g @ other.value.T,
                 lambda g: self.value.T @ g),
                fwd=lambda: self.value @ other.value)
        c = other
        return Node(self.tape, self.value @ c, (self,),
                    (lambda g: g @ c.T,),
                    fwd=lambda: self.value @ c)

    def __rmatmul__(self, other):
        # constant-matrix @ node
        c = other
        return Node(self.tape, c @ self.value, (self,),
                    (lambda g: c.T @ g,),
                    fwd=lambda: c @ self.value)

    # -- reductions and elementwise functions -------------------------------

    def ravel(self):
        shp = np.shape(self.value)
        return Node(self.tape, np.ravel(self.value), (self,),
                    (lambda g: np.reshape(g, shp),),
                    fwd=lambda: np.ravel(self.value))

    def rows(self, i0, i1):
        """View of rows [i0, i1) along the leading axis."""
        def back(g):
            out = np.zeros(np.shape(self.value))
            out[i0:i1] = g
            return out

        return Node(self.tape, self.value[i0:i1], (self,), (back,),
                    fwd=lambda: self.value[i0:i1])

    def sum(self):
        return Node(self.tape, float(np.sum(self.value)), (self,),
                    (lambda g: np.broadcast_to(g, np.shape(self.value)),),
                    fwd=lambda: float(np.sum(self.value)))

    def mean(self):
        n = np.size(self.value)
        return self.sum() * (1.0 / n)

    def tanh(self):
        out = Node(self.tape, np.tanh(self.value), (self,), (),
                   fwd=lambda: np.tanh(self.value))
        # reuse the stored forward value instead of recomputing tanh
        out.backfns = (lambda g: g * (1.0 - out.value ** 2),)
        return out


def tanh(x):
    """Hyperbolic tangent that works on Nodes as well as plain arrays."""
    return x.tanh() if isinstance(x, Node) else np.tanh(x)


def aravel(x):
    """Flatten to 1-D, generic over Node / ndarray."""
    return x.ravel() if isinstance(x, Node) else np.ravel(x)


def asum(x):
    """Sum of all entries, generic over Node / ndarray."""
    return x.sum() if isinstance(x, Node) else float(np.sum(x))


def amean(x):
    """Mean of all entries, generic over Node / ndarray."""
    return x.mean() if isinstance(x, Node) else float(np.mean(x))


def backward(loss):
    """Reverse accumulation from scalar ``loss`` over its tape.

    Returns a list ``grads`` aligned with ``tape.nodes`` (None where the
    loss does not depend on a node). The walk order is the fixed reverse
    creation order, so repeated calls are bit-identical.
    """
    if not isinstance(loss, Node):
        raise TypeError("loss must be a Node recorded on a ParamTape")
    if np.ndim(loss.value) != 0:
        raise ValueError("loss must be scalar")
    tape = loss.tape
    grads = [None] * (loss.index + 1)
    grads[loss.index] = np.asarray(1.0)
    for node in reversed(tape.nodes[: loss.index + 1]):
        g = grads[node.index]
        if g is None:
            continue
        for parent, backfn in zip(node.parents, node.backfns):
            contrib = backfn(g)
            if grads[parent.index] is None:
                grads[parent.index] = np.asarray(contrib, dtype=float)
            else:
                grads[parent.index] = grads[parent.index] + contrib
    return grads


def param_gradient(tape, loss):
    """d(loss)/d(parameter) for every registered leaf, flattened in order.

    Derivatives that flow through second-derivative jet slots are included
    automatically because those slots are themselves recorded ops.
    """
    if not isinstance(loss, Node) or loss.tape is not tape:
        raise ValueError("loss was not recorded on this tape")
    if not tape.leaves:
        raise ValueError("tape has no parameter leaves")
    grads = backward(loss)
    parts = []
    for leaf in tape.leaves:
        g = grads[leaf.index]
        if g is None:
            g = np.zeros(np.shape(leaf.value))
        parts.append(np.asarray(g, dtype=float).ravel())
    out = np.concatenate(parts) if parts else np.zeros(0)
    check_finite(out, "parameter gradient")
    return out


# ---------------------------------------------------------------------------
# 2-jets: value + first and second partials w.r.t. the two spatial inputs
# ---------------------------------------------------------------------------

@dataclass
class Jet2:
    """A scalar field value with its first/second spatial partials.

    The single ``dxy`` slot encodes Schwarz symmetry structurally. Slots may
    be scalars, arrays over sample points, or tape Nodes.
    """

    v: object
    dx: object
    dy: object
    dxx: object
    dxy: object
    dyy: object

    def slots(self):
        return (self.v, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    def values(self):
        """Plain numeric copy of all six slots."""
        return Jet2(*(np.asarray(value_of(s), dtype=float) for s in self.slots()))

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(*(a + b for a, b in zip(self.slots(), other.slots())))
        # adding a constant shifts the value only
        return Jet2(self.v + other, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(*(-s for s in self.slots()))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            f, g = self, other
            return Jet2(
                f.v * g.v,
                f.dx * g.v + f.v * g.dx,
                f.dy * g.v + f.v * g.dy,
                f.dxx * g.v + 2.0 * f.dx * g.dx + f.v * g.dxx,
                f.dxy * g.v + f.dx * g.dy + f.dy * g.dx + f.v * g.dxy,
                f.dyy * g.v + 2.0 * f.dy * g.dy + f.v * g.dyy,
            )
        return Jet2(*(s * other for s in self.slots()))

    __rmul__ = __mul__

    def check_finite(self, where=""):
        for name, s in zip(("v", "dx", "dy", "dxx", "dxy", "dyy"), self.slots()):
            check_finite(s, f"{where}.{name}" if where else name)
        return self


def jet_seed(x, y):
    """Lift coordinates into the jet algebra: (x with dx=1, y with dy=1)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonFiniteError("non-finite seed coordinates")
    zero = np.zeros(np.shape(x))
    one = np.ones(np.shape(x))
    jx = Jet2(x.copy(), one.copy(), zero.copy(), zero.copy(), zero.copy(), zero.copy())
    jy = Jet2(y.copy(), zero.copy(), one.copy(), zero.copy(), zero.copy(), zero.copy())
    return jx, jy


def jet_rows(jet: "Jet2", i0, i1) -> "Jet2":
    """Rows [i0, i1) of every slot of a batched jet."""
    return Jet2(*((s.rows(i0, i1) if isinstance(s, Node) else s[i0:i1])
                  for s in jet.slots()))


def jet_stack(jets):
    """Column-stack scalar jets into one jet with (n, k) slots."""
    return Jet2(*(np.column_stack([np.atleast_1d(value_of(j.slots()[i])) for j in jets])
                  for i in range(6)))


def jet_affine(W, b, jet):
    """Apply ``slot -> slot @ W + b`` to a jet whose slots are (..., fan_in).

    The same linear map acts independently on all six slots; the bias shifts
    the value slot only.
    """
    W_arr = value_of(W)
    fan_in = np.shape(W_arr)[0]
    if np.shape(value_of(jet.v))[-1] != fan_in:
        raise ValueError(
            f"dimension mismatch: jet has width {np.shape(value_of(jet.v))[-1]}, "
            f"weight expects {fan_in}")
    out = [s @ W for s in jet.slots()]
    if b is not None:
        out[0] = out[0] + b
    return Jet2(*out)


def jet_activation(jet, activation):
    """Compose a twice-differentiable scalar function with a jet (chain rule).

    ``activation.jet_coefficients(u)`` must return ``(f(u), f'(u), f''(u))``
    built from generic ops, so parameter gradients can flow through the
    coefficients themselves on the traced path.
    """
    u = jet
    f0, f1, f2 = activation.jet_coefficients(u.v)
    out = Jet2(
        f0,
        f1 * u.dx,
        f1 * u.dy,
        f2 * u.dx * u.dx + f1 * u.dxx,
        f2 * u.dx * u.dy + f1 * u.dxy,
        f2 * u.dy * u.dy + f1 * u.dyy,
    )
    return out.check_finite("activation output")
