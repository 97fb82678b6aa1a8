"""Seeded synthetic worlds with known class and occlusion-error subspaces.

Geometry
--------
One orthonormal frame is drawn and carved into blocks:

- ``shared``: a single direction common to every class. Real deep features
  of different classes are strongly correlated (post-ReLU activations share
  a large positive mean); ``common_scale`` controls that component.
- ``class c``: ``class_dim - 1`` private directions; the class basis is
  [shared, private_c].
- ``pattern p``: ``pattern_dim`` private directions.

With ``leakage = 0`` and ``overlap = 0`` every pattern direction is exactly
orthogonal to every class direction. ``leakage`` mixes each pattern
direction with the center direction of one class (pattern direction j of the
flattened list leaks toward class j mod K_A), so the error pushes features
toward or away from specific classes while the two spans stay independent; ``overlap`` tilts the first direction of every
pattern toward ``shared`` and reaches a fully shared direction at 1.0.

Random source
-------------
Philox4x64-10 keyed with ``(seed, 0)`` and counter starting at 0. Raw
64-bit words become doubles as ``(x >> 11) * 2**-53``; normals come from the
Box-Muller transform on consecutive pairs, (u1, u2) -> sqrt(-2 ln(1 - u1)) *
cos(2 pi u2) and the matching sine. Draw order is fixed by ``generate``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .core import LabeledFeatureSet
from .errors import InfeasibleSpec

_TWO53 = 2.0 ** -53


class PhiloxStream:
    """Counter-based stream of uniforms and normals (see module docstring)."""

    def __init__(self, seed: int):
        self.bitgen = np.random.Philox(key=int(seed) & (2 ** 64 - 1))

    def uniform(self, size: int) -> np.ndarray:
        raw = self.bitgen.random_raw(size)
        return (raw >> np.uint64(11)).astype(np.float64) * _TWO53

    def normal(self, shape) -> np.ndarray:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape))
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()
        return z[:n].reshape(shape)

    def integers(self, high: int, size: int) -> np.ndarray:
        return np.minimum((self.uniform(size) * high).astype(np.int64), high - 1)


def orthonormal(g: np.ndarray) -> np.ndarray:
    """Sign-fixed thin QR so the basis is a deterministic function of g."""
    q, r = np.linalg.qr(g)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s


@dataclass(frozen=True)
class WorldSpec:
    m: int = 256
    k_classes: int = 10
    class_dim: int = 5
    k_patterns: int = 4
    pattern_dim: int = 3
    train_per_class: int = 20
    queries_per_class: int = 30
    pairs_per_pattern: int = 40
    occlusion_energy: float = 0.5
    noise_sigma: float = 0.01
    train_noise: float = 0.0
    nonneg_features: bool = False
    seed: int = 42
    # geometry knobs
    common_scale: float = 3.0
    center_scale: float = 1.0
    class_spread: float = 0.35
    pair_energy: float = 0.5
    leakage: float = 0.0
    overlap: float = 0.0
    orthogonalize: bool = True

    def validate(self) -> None:
        if min(self.m, self.k_classes, self.k_patterns, self.pattern_dim) < 1:
            raise InfeasibleSpec("dimensions and counts must be positive")
        if self.class_dim < 2:
            raise InfeasibleSpec("class_dim must be >= 2 (shared + private directions)")
        if self.class_dim * self.k_classes + self.pattern_dim * self.k_patterns > self.m:
            raise InfeasibleSpec(
                f"class_dim*K_A + pattern_dim*K_B = "
                f"{self.class_dim * self.k_classes + self.pattern_dim * self.k_patterns}"
                f" exceeds m = {self.m}")
        if min(self.train_per_class, self.queries_per_class, self.pairs_per_pattern) < 0:
            raise InfeasibleSpec("counts must be nonnegative")
        if self.train_per_class < 1:
            raise InfeasibleSpec("need at least one training feature per class")
        for name in ("occlusion_energy", "noise_sigma", "train_noise", "pair_energy", "common_scale",
                     "center_scale", "class_spread"):
            if not getattr(self, name) >= 0:
                raise InfeasibleSpec(f"{name} must be nonnegative")
        if not (0.0 <= self.leakage < 1.0):
            raise InfeasibleSpec("leakage must lie in [0, 1)")
        if not (0.0 <= self.overlap <= 1.0):
            raise InfeasibleSpec("overlap must lie in [0, 1]")


def benchmark_spec(**overrides) -> WorldSpec:
    """The fixed desk-scale benchmark world (seed 42).

    10 classes x (20 train, 30 query), 4 patterns x 40 pairs, class_dim 5,
    pattern_dim 3, m = 256, noise 0.01, occlusion energy 0.5.

    ``leakage=0.8`` lets the error disturb class-discriminative directions;
    with fully orthogonal blocks no Euclidean classifier can be hurt by the
    error at all. ``train_noise=0.01`` keeps the training columns in general
    position so the l1 problem has a unique, well-conditioned solution.
    """
    base = WorldSpec(leakage=0.8, train_noise=0.01)
    return replace(base, **overrides)


@dataclass(frozen=True)
class GroundTruth:
    v0: np.ndarray            # m x q clean queries
    eps: np.ndarray           # m x q occlusion errors (noise excluded)
    noise: np.ndarray         # m x q
    class_ids: np.ndarray
    pattern_ids: np.ndarray


@dataclass(frozen=True)
class SynthWorld:
    spec: WorldSpec
    shared: np.ndarray
    class_bases: list
    pattern_bases: list
    train: LabeledFeatureSet
    extra_free: LabeledFeatureSet
    extra_occluded: LabeledFeatureSet
    queries_clean: LabeledFeatureSet
    queries_occluded: LabeledFeatureSet
    ground_truth: GroundTruth
    shift: float = 0.0
    meta: dict = field(default_factory=dict)


def _mix(a: np.ndarray, b: np.ndarray, w: float) -> np.ndarray:
    return np.sqrt(1.0 - w * w) * a + w * b


def _draw_frame(spec: WorldSpec, rs: PhiloxStream):
    m, ka, kb = spec.m, spec.k_classes, spec.k_patterns
    npriv = spec.class_dim - 1
    ncls = 1 + ka * npriv
    npat = kb * spec.pattern_dim
    if spec.orthogonalize:
        q = orthonormal(rs.normal((m, ncls + npat)))
        cls_block, pat_block = q[:, :ncls], q[:, ncls:]
    else:
        cls_block = orthonormal(rs.normal((m, ncls)))
        pat_block = np.hstack([orthonormal(rs.normal((m, spec.pattern_dim)))
                               for _ in range(kb)])
    shared = cls_block[:, 0]
    privates = [cls_block[:, 1 + c * npriv: 1 + (c + 1) * npriv] for c in range(ka)]
    class_bases = [np.column_stack([shared, p]) for p in privates]

    # class centers in private coordinates; the error leaks toward them
    centers = rs.normal((npriv, ka))
    centers /= np.linalg.norm(centers, axis=0)
    center_dirs = np.column_stack([privates[c] @ centers[:, c] for c in range(ka)])
    leak_dirs = center_dirs[:, np.arange(npat) % ka]

    pattern_bases = []
    for p in range(kb):
        cols = slice(p * spec.pattern_dim, (p + 1) * spec.pattern_dim)
        b = _mix(pat_block[:, cols], leak_dirs[:, cols], spec.leakage)
        if spec.overlap > 0:
            b[:, 0] = _mix(b[:, 0], shared, spec.overlap)
        pattern_bases.append(orthonormal(b))
    return shared, class_bases, pattern_bases, centers


def _class_features(spec, rs, class_bases, centers, labels):
    n = labels.size
    coef = np.empty((spec.class_dim, n))
    coef[0] = spec.common_scale * (1.0 + 0.1 * rs.normal(n))
    coef[1:] = centers[:, labels] + spec.class_spread * rs.normal((spec.class_dim - 1, n))
    out = np.empty((spec.m, n))
    for c in np.unique(labels):
        sel = labels == c
        out[:, sel] = class_bases[c] @ coef[:, sel]
    return out


def _errors(spec, rs, pattern_bases, patterns, ref, energy):
    eps = np.empty_like(ref)
    z = rs.normal((spec.pattern_dim, patterns.size))
    for j, p in enumerate(patterns):
        e = pattern_bases[p] @ z[:, j]
        eps[:, j] = e * (energy * np.linalg.norm(ref[:, j]) / np.linalg.norm(e))
    return eps


def generate(spec: WorldSpec) -> SynthWorld:
    """Build a world; identical specs give bit-identical worlds."""
    spec.validate()
    rs = PhiloxStream(spec.seed)
    shared, class_bases, pattern_bases, centers = _draw_frame(spec, rs)
    centers = spec.center_scale * centers

    ka, kb = spec.k_classes, spec.k_patterns
    train_lab = np.repeat(np.arange(ka), spec.train_per_class)
    query_lab = np.repeat(np.arange(ka), spec.queries_per_class)
    pair_pat = np.repeat(np.arange(kb), spec.pairs_per_pattern)
    pair_cls = rs.integers(ka, pair_pat.size)
    query_pat = rs.integers(kb, query_lab.size)

    train = _class_features(spec, rs, class_bases, centers, train_lab)
    free = _class_features(spec, rs, class_bases, centers, pair_cls)
    v0 = _class_features(spec, rs, class_bases, centers, query_lab)

    shift = 0.0
    if spec.nonneg_features:
        lo = min(a.min() if a.size else 0.0 for a in (train, free, v0))
        shift = max(0.0, -lo)
        train, free, v0 = train + shift, free + shift, v0 + shift

    pair_eps = _errors(spec, rs, pattern_bases, pair_pat, free, spec.pair_energy)
    pair_noise = spec.noise_sigma * rs.normal(free.shape)
    eps = _errors(spec, rs, pattern_bases, query_pat, v0, spec.occlusion_energy)
    noise = spec.noise_sigma * rs.normal(v0.shape)
    if spec.train_noise > 0:
        train = train + spec.train_noise * rs.normal(train.shape)

    return SynthWorld(
        spec=spec,
        shared=shared,
        class_bases=class_bases,
        pattern_bases=pattern_bases,
        train=LabeledFeatureSet(train, train_lab),
        extra_free=LabeledFeatureSet(free, pair_pat),
        extra_occluded=LabeledFeatureSet(free + pair_eps + pair_noise, pair_pat),
        queries_clean=LabeledFeatureSet(v0, query_lab),
        queries_occluded=LabeledFeatureSet(v0 + eps + noise, query_lab),
        ground_truth=GroundTruth(v0, eps, noise, query_lab, query_pat),
        shift=shift,
        meta={"pair_classes": pair_cls},
    )


@dataclass(frozen=True)
class AngleReport:
    cosines: np.ndarray       # principal-angle cosines, descending
    max_cosine: float
    min_cosine: float
    mean_cosine: float


def principal_cosines(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cosines of the principal angles between span(x) and span(y)."""
    qx = linalg.orth(x)
    qy = linalg.orth(y)
    s = np.linalg.svd(qx.T @ qy, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def subspace_angle_report(world: SynthWorld) -> AngleReport:
    """Principal angles between the total class span and total pattern span."""
    a = np.column_stack([world.shared] + [b[:, 1:] for b in world.class_bases])
    b = np.hstack(world.pattern_bases)
    cos = principal_cosines(a, b)
    return AngleReport(cos, float(cos.max()), float(cos.min()), float(cos.mean()))
