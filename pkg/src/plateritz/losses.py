"""Trainable objectives: bending energy, frequency quotient, buckling ratio.

Each loss couples the interior energy integral with mean-square penalties
on the essential boundary conditions (deflection on clamped and simply
supported edges, normal rotation on clamped edges). Moment conditions on
simply supported edges are natural under the energy formulation and are
deliberately not penalized. The assembly routines take a generic
``eval_jets(points) -> Jet2`` so they serve the traced training path, the
plain reporting path, and oracle-injected fields in tests alike.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .autodiff import ParamTape, asum, jet_rows, param_gradient, value_of
from .geometry import SampleSet, mc_integrate
from .network import NetworkConfig, NetworkParams, forward_jet, lift_params
from .plate_energy import (PlateSpec, bending_energy_density,
                           edge_moment_work_density, edge_work_density,
                           external_work_density, inplane_work_density,
                           normal_rotation, rayleigh_quotient,
                           winkler_energy_density)

PROBLEMS = ("bending", "vibration", "buckling")

ESSENTIAL_W = ("clamped", "simply_supported")   # w prescribed
ESSENTIAL_ROT = ("clamped",)                    # dw/dn prescribed


@dataclass
class LossConfig:
    """Objective selection and penalty weights."""

    problem: str
    beta_w: float = 1.0
    beta_theta: float = 1.0
    k_penalty: float = 10.0
    n_interior: int = 4096
    n_boundary: int = 256

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.beta_w <= 0 or self.beta_theta <= 0:
            raise ValueError("boundary penalty weights must be positive")
        if self.problem in ("vibration", "buckling"):
            if self.k_penalty <= 0:
                raise ValueError("normalization penalty must be positive for "
                                 "vibration/buckling")
            if not 1.0 <= self.k_penalty <= 100.0:
                warnings.warn(
                    f"normalization penalty {self.k_penalty} outside the usual "
                    "[1, 100] band", stacklevel=2)


def boundary_mse(values, targets):
    """Mean squared deviation of predictions from targets."""
    n = np.size(value_of(values))
    if n == 0:
        raise ValueError("boundary mean-square error over an empty set")
    r = values - targets
    return asum(r * r) * (1.0 / n)


def _check_segments(samples: SampleSet):
    declared = set(samples.domain.edge_names)
    sampled = {bs.segment.name for bs in samples.boundary}
    missing = declared - sampled
    if missing:
        raise ValueError(
            f"missing boundary samples for declared segment(s): {sorted(missing)}")


def _segment_needs(seg):
    needs_w = seg.kind in ESSENTIAL_W
    needs_rot = seg.kind in ESSENTIAL_ROT
    has_edge_load = seg.kind == "free" and seg.line_load != 0.0
    has_edge_moment = seg.kind in ("simply_supported", "free") and seg.edge_moment != 0.0
    return needs_w, needs_rot, has_edge_load, has_edge_moment


def _evaluate_groups(eval_jets, samples: SampleSet):
    """One forward pass over interior plus every boundary group that needs it.

    Returns (interior jets, {segment name: jets}); batching all points into
    a single network evaluation keeps the tape short.
    """
    groups = [samples.interior]
    active = []
    for bs in samples.boundary:
        if any(_segment_needs(bs.segment)):
            groups.append(bs.points)
            active.append(bs.segment.name)
    jets = eval_jets(np.vstack(groups))
    split, i0 = [], 0
    for g in groups:
        split.append(jet_rows(jets, i0, i0 + len(g)))
        i0 += len(g)
    return split[0], dict(zip(active, split[1:]))


def _essential_penalties(boundary_jets, samples: SampleSet):
    """Union mean-square residuals of the essential boundary conditions.

    Residual sums are pooled across segments and divided by the pooled
    point count, which equals the mean over the concatenated union.
    """
    w_sum, w_n = 0.0, 0
    rot_sum, rot_n = 0.0, 0
    work = 0.0
    for bs in samples.boundary:
        seg = bs.segment
        needs_w, needs_rot, has_edge_load, has_edge_moment = _segment_needs(seg)
        if seg.name not in boundary_jets:
            continue
        jets = boundary_jets[seg.name]
        if needs_w:
            r = jets.v - seg.prescribed_w
            w_sum = w_sum + asum(r * r)
            w_n += len(bs.points)
        if needs_rot or has_edge_moment:
            rot = normal_rotation(jets, bs.normals)
            if needs_rot:
                r = rot - seg.prescribed_rotation
                rot_sum = rot_sum + asum(r * r)
                rot_n += len(bs.points)
            if has_edge_moment:
                work = work + mc_integrate(
                    edge_moment_work_density(rot, seg.edge_moment), seg.length)
        if has_edge_load:
            work = work + mc_integrate(
                edge_work_density(jets.v, seg.line_load), seg.length)
    mse_w = w_sum * (1.0 / w_n) if w_n else 0.0
    mse_rot = rot_sum * (1.0 / rot_n) if rot_n else 0.0
    return mse_w, mse_rot, work, {"n_w": w_n, "n_rot": rot_n}


def bending_loss_from_field(eval_jets, samples: SampleSet, spec: PlateSpec,
                            cfg: LossConfig):
    """Total potential energy plus weighted essential-condition penalties."""
    _check_segments(samples)
    jets, boundary_jets = _evaluate_groups(eval_jets, samples)
    density = bending_energy_density(jets, spec)
    if spec.foundation_k > 0.0:
        density = density + winkler_energy_density(jets.v, spec.foundation_k)
    pi = mc_integrate(density, samples.area)
    if spec.load is not None:
        p = spec.load(samples.interior[:, 0], samples.interior[:, 1])
        pi = pi + mc_integrate(external_work_density(jets.v, p), samples.area)
    mse_w, mse_rot, edge_work, counts = _essential_penalties(boundary_jets, samples)
    pi = pi + edge_work
    loss = pi + cfg.beta_w * mse_w + cfg.beta_theta * mse_rot
    parts = {"potential": value_of(pi), "mse_w": value_of(mse_w),
             "mse_rotation": value_of(mse_rot), **counts}
    return loss, parts


def vibration_loss_from_field(eval_jets, samples: SampleSet, spec: PlateSpec,
                              cfg: LossConfig):
    """Frequency quotient plus mode-normalization and boundary penalties."""
    _check_segments(samples)
    jets, boundary_jets = _evaluate_groups(eval_jets, samples)
    quotient = rayleigh_quotient(jets, spec, samples.area)
    norm = mc_integrate(jets.v * jets.v, samples.area)
    penalty = cfg.k_penalty * (norm - 1.0) ** 2
    mse_w, mse_rot, _, counts = _essential_penalties(boundary_jets, samples)
    loss = quotient + penalty + cfg.beta_w * mse_w + cfg.beta_theta * mse_rot
    parts = {"quotient": value_of(quotient), "mode_norm": value_of(norm),
             "penalty": value_of(penalty), "mse_w": value_of(mse_w),
             "mse_rotation": value_of(mse_rot), **counts}
    return loss, parts


def buckling_loss_from_field(eval_jets, samples: SampleSet, spec: PlateSpec,
                             cfg: LossConfig):
    """Load-factor ratio plus mode-normalization and boundary penalties."""
    _check_segments(samples)
    if not any(abs(N) > 0.0 for N in spec.inplane):
        raise ValueError("buckling requires nonzero in-plane reference forces")
    jets, boundary_jets = _evaluate_groups(eval_jets, samples)
    U = mc_integrate(bending_energy_density(jets, spec), samples.area)
    W = mc_integrate(inplane_work_density(jets, spec), samples.area)
    if abs(value_of(W)) < 1e-300:
        raise ValueError("vanishing in-plane work denominator")
    ratio = U / W
    norm = mc_integrate(jets.v * jets.v, samples.area)
    penalty = cfg.k_penalty * (norm - 1.0) ** 2
    mse_w, mse_rot, _, counts = _essential_penalties(boundary_jets, samples)
    loss = ratio + penalty + cfg.beta_w * mse_w + cfg.beta_theta * mse_rot
    parts = {"load_factor": value_of(ratio), "mode_norm": value_of(norm),
             "penalty": value_of(penalty), "mse_w": value_of(mse_w),
             "mse_rotation": value_of(mse_rot), **counts}
    return loss, parts


_FROM_FIELD = {
    "bending": bending_loss_from_field,
    "vibration": vibration_loss_from_field,
    "buckling": buckling_loss_from_field,
}


def _plain_loss(problem, params, samples, spec, net_cfg, cfg):
    loss, parts = _FROM_FIELD[problem](
        lambda pts: forward_jet(params, net_cfg, pts), samples, spec, cfg)
    return float(value_of(loss)), parts


def bending_loss(params, samples, spec, net_cfg, cfg):
    """Bending objective value for given network parameters."""
    return _plain_loss("bending", params, samples, spec, net_cfg, cfg)[0]


def vibration_loss(params, samples, spec, net_cfg, cfg):
    """Vibration objective value for given network parameters."""
    return _plain_loss("vibration", params, samples, spec, net_cfg, cfg)[0]


def buckling_loss(params, samples, spec, net_cfg, cfg):
    """Buckling objective value for given network parameters."""
    return _plain_loss("buckling", params, samples, spec, net_cfg, cfg)[0]


def make_objective(net_cfg: NetworkConfig, samples: SampleSet, spec: PlateSpec,
                   cfg: LossConfig):
    """Build ``theta -> (loss, gradient)`` plus a report-only evaluator.

    The gradient flows through every jet slot entering the energy, so one
    call prices the full objective of the selected problem.
    """
    from_field = _FROM_FIELD[cfg.problem]

    def objective(theta):
        tape = ParamTape()
        params = lift_params(tape, NetworkParams.from_flat(net_cfg, theta))
        loss, _ = from_field(lambda pts: forward_jet(params, net_cfg, pts),
                             samples, spec, cfg)
        grad = param_gradient(tape, loss)
        return float(value_of(loss)), grad

    def evaluate(theta):
        params = NetworkParams.from_flat(net_cfg, theta)
        return _plain_loss(cfg.problem, params, samples, spec, net_cfg, cfg)

    return objective, evaluate
