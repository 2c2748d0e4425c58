"""Geometric channel synthesis for a BS / RIS / multi-UE downlink.

The model draws multipath channels between uniform planar arrays (UPAs):

* direct BS->UE matrices ``H_d[k]`` (M x N), a sum of P_a rank-one paths;
* a BS->RIS->UE tensor ``T_ris[k]`` (M x L x N) whose (pb, pc) path-pair term
  is ``gamma * Omega(pb, pc) * hadamard2(a_M a_L^H, a_L a_N^H)`` so that
  contracting axis 2 with the RIS phase vector phi yields the composite
  reflected channel.

Path gains are complex Gaussian with variance set by a reference gain times
``(d / d_ref)^(-alpha)``; the first path of every link is line-of-sight (LoS)
at the LoS exponent, the rest are NLoS at the NLoS exponent with lengths
``d_los + Unif[0, 0.4 d_los]``.  The composite path-pair gain variance of the
RIS link is the SUM of the two hop pathloss terms (a deliberate modelling
choice, kept configurable through the reference gains).

Randomness is counter-based: every (trial, ue, link) tuple gets its own
Philox substream derived from the root seed, so any single draw is
reproducible in isolation and thread scheduling cannot change results.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .tensor_ops import mode_product

# Substream link ids (see `substream`).
LINK_UE_POS = 0
LINK_DIRECT = 1
LINK_BS_RIS = 2
LINK_RIS_UE = 3
LINK_BASELINE_PHI = 4


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: horizontal x vertical elements, spacing in
    wavelengths (default half-wavelength)."""

    horizontal_count: int
    vertical_count: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.horizontal_count < 1 or self.vertical_count < 1:
            raise ConfigError("array needs at least one element per axis")
        if self.spacing_over_wavelength <= 0:
            raise ConfigError("element spacing must be positive")

    @property
    def total(self):
        return self.horizontal_count * self.vertical_count


def near_square_geometry(total, spacing_over_wavelength=0.5):
    """Factor a total element count into the most-square h x v pair, h >= v."""
    if total < 1:
        raise ConfigError(f"element count must be >= 1, got {total}")
    v = int(np.floor(np.sqrt(total)))
    while total % v:
        v -= 1
    return ArrayGeometry(total // v, v, spacing_over_wavelength)


def upa_response(geom, az, el):
    """UPA steering vector: kron(horizontal, vertical).

    The horizontal factor advances by ``2 pi s cos(az) sin(el)`` per element
    and the vertical factor by ``2 pi s cos(el)``, s = spacing/wavelength.
    Every entry has unit modulus; length equals ``geom.total``.
    """
    s = geom.spacing_over_wavelength
    hor = np.exp(
        1j * 2.0 * np.pi * s * np.arange(geom.horizontal_count) * np.cos(az) * np.sin(el)
    )
    ver = np.exp(1j * 2.0 * np.pi * s * np.arange(geom.vertical_count) * np.cos(el))
    return np.kron(hor, ver)


@dataclass(frozen=True)
class PathSpec:
    """One propagation path: complex gain plus arrival/departure angles."""

    gain: complex
    aoa_az: float
    aoa_el: float
    aod_az: float
    aod_el: float

    def __post_init__(self):
        if not np.isfinite(complex(self.gain)):
            raise DomainError("path gain must be finite")
        for a in (self.aoa_az, self.aoa_el, self.aod_az, self.aod_el):
            if not np.isfinite(a):
                raise DomainError("path angles must be finite")


@dataclass(frozen=True)
class RisResponseModel:
    """Per-path-pair element response Omega(pb, pc).

    kind = "constant": Omega = value everywhere (value 1 reduces the tensor
    model to the conventional separable one when the gains are separable).
    kind = "separable_cosine": Omega = cos(el_in)^p * cos(el_out)^p using the
    elevations of the incoming BS path and outgoing UE path at the RIS.
    kind = "table": explicit lookup keyed by the rounded angle quadruple
    (az_in, el_in, az_out, el_out), 9 decimals.
    """

    kind: str = "constant"
    value: complex = 1.0 + 0.0j
    exponent: float = 1.0
    table: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("constant", "separable_cosine", "table"):
            raise ConfigError(f"unknown RIS response kind {self.kind!r}")
        if not np.isfinite(self.value):
            raise ConfigError("constant response value must be finite")

    @staticmethod
    def table_key(az_in, el_in, az_out, el_out):
        return (round(float(az_in), 9), round(float(el_in), 9),
                round(float(az_out), 9), round(float(el_out), 9))

    def evaluate(self, az_in, el_in, az_out, el_out):
        """Response for one (incoming, outgoing) angle pair at the RIS."""
        if self.kind == "constant":
            return complex(self.value)
        if self.kind == "separable_cosine":
            return (np.cos(el_in) ** self.exponent) * (np.cos(el_out) ** self.exponent)
        key = self.table_key(az_in, el_in, az_out, el_out)
        try:
            return complex(self.table[key])
        except KeyError:
            raise DomainError(
                f"RIS response table has no entry for angle quadruple {key}"
            ) from None

    def matrix(self, in_az, in_el, out_az, out_el):
        """Omega as a (P_b x P_c) matrix over all drawn angle pairs."""
        pb, pc = len(in_az), len(out_az)
        if self.kind == "constant":
            return np.full((pb, pc), complex(self.value))
        if self.kind == "separable_cosine":
            return np.outer(np.cos(in_el) ** self.exponent,
                            np.cos(out_el) ** self.exponent).astype(complex)
        out = np.empty((pb, pc), dtype=complex)
        for b in range(pb):
            for c in range(pc):
                out[b, c] = self.evaluate(in_az[b], in_el[b], out_az[c], out_el[c])
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Full scenario description: geometry, multipath counts, link budgets.

    Distances are meters, angles radians, powers dBm.  ``ue_area`` is
    (x_min, x_max, y_min, y_max); UEs are placed uniformly in it at
    ``ue_height`` unless ``ue_positions`` pins them explicitly.
    """

    bs_position: tuple = (0.0, 0.0, 35.0)
    ris_position: tuple = (50.0, 0.0, 15.0)
    ue_area: tuple = (50.0, 100.0, -15.0, 15.0)
    ue_height: float = 1.5
    num_ues: int = 4
    bs_geometry: ArrayGeometry = field(default_factory=lambda: near_square_geometry(8))
    ue_geometry: ArrayGeometry = field(default_factory=lambda: near_square_geometry(4))
    ris_geometry: ArrayGeometry = field(default_factory=lambda: near_square_geometry(32))
    paths_direct: int = 16
    paths_bs_ris: int = 16
    paths_ris_ue: int = 16
    pathloss_exponent_los: float = 2.5
    pathloss_exponent_nlos: float = 3.0
    ref_gain_direct: float = 1e-9
    ref_gain_bs_ris: float = 1.5e-14
    ref_gain_ris_ue: float = 1.5e-14
    ref_distance: float = 1.0
    tx_power_dbm: float = 30.0
    noise_dbm: float = -104.0
    rng_seed: int = 0
    ue_positions: tuple = None

    def __post_init__(self):
        if min(self.paths_direct, self.paths_bs_ris, self.paths_ris_ue) < 1:
            raise ConfigError("every link needs at least one path (the LoS one)")
        if self.num_ues < 1:
            raise ConfigError("num_ues must be >= 1")
        for name in ("pathloss_exponent_los", "pathloss_exponent_nlos",
                     "ref_gain_direct", "ref_gain_bs_ris", "ref_gain_ris_ue",
                     "ref_distance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.ue_area[1] < self.ue_area[0] or self.ue_area[3] < self.ue_area[2]:
            raise ConfigError("ue_area must be (x_min, x_max, y_min, y_max)")
        if self.ue_positions is not None and len(self.ue_positions) != self.num_ues:
            raise ConfigError("ue_positions must list one position per UE")

    @property
    def tx_power_w(self):
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def noise_w(self):
        return dbm_to_watts(self.noise_dbm)

    @property
    def num_bs_antennas(self):
        return self.bs_geometry.total

    @property
    def num_ue_antennas(self):
        return self.ue_geometry.total

    @property
    def num_ris_elements(self):
        return self.ris_geometry.total


def substream(root_seed, axis_index, trial, ue, link):
    """Counter-based generator for one (axis point, trial, ue, link) tuple."""
    seq = np.random.SeedSequence(
        entropy=[int(root_seed), int(axis_index), int(trial), int(ue), int(link)]
    )
    return np.random.Generator(np.random.Philox(seq))


def _draw_angles(rng, count):
    """Sector angles: azimuth Unif[-pi/2, pi/2], elevation Unif[0, pi/2]."""
    az = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=count)
    el = rng.uniform(0.0, np.pi / 2.0, size=count)
    return az, el


def _path_distances(rng, d_los, count):
    """LoS distance first, then NLoS lengths d_los + Unif[0, 0.4 d_los]."""
    d = np.full(count, d_los)
    if count > 1:
        d[1:] += rng.uniform(0.0, 0.4 * d_los, size=count - 1)
    return d


def _pathloss(cfg, ref_gain, dists):
    """Per-path gain variance: the LoS path (index 0) uses the LoS exponent."""
    alpha = np.full(len(dists), cfg.pathloss_exponent_nlos)
    alpha[0] = cfg.pathloss_exponent_los
    return ref_gain * (dists / cfg.ref_distance) ** (-alpha)


def _draw_gains(rng, variances):
    re = rng.standard_normal(variances.shape)
    im = rng.standard_normal(variances.shape)
    return np.sqrt(variances / 2.0) * (re + 1j * im)


def assemble_path_sum(paths, tx_geom, rx_geom):
    """Sum of rank-one path terms gamma * a_tx(aod) a_rx(aoa)^H."""
    m, n = tx_geom.total, rx_geom.total
    h = np.zeros((m, n), dtype=complex)
    for p in paths:
        a_tx = upa_response(tx_geom, p.aod_az, p.aod_el)
        a_rx = upa_response(rx_geom, p.aoa_az, p.aoa_el)
        h += p.gain * np.outer(a_tx, a_rx.conj())
    return h


def assemble_ris_tensor(bs_steer, ris_in_steer, ris_out_steer, ue_steer, pair_gains):
    """RIS channel tensor from steering matrices and per-pair gains.

    bs_steer (M x Pb), ris_in_steer (L x Pb), ris_out_steer (L x Pc),
    ue_steer (N x Pc), pair_gains (Pb x Pc) already including the element
    response.  Entry (m, l, n) sums gamma_{bc} * a_M(m) * conj(u_b(l)) *
    v_c(l) * conj(w_c(n)) over all path pairs, i.e. the per-pair
    ``hadamard2(a_M a_L^H, a_L a_N^H)`` structure.
    """
    return np.einsum(
        "bc,mb,lb,lc,nc->mln",
        pair_gains, bs_steer, ris_in_steer.conj(), ris_out_steer, ue_steer.conj(),
        optimize=True,
    )


def draw_direct_channel(cfg, ue_position, rng):
    """Direct BS->UE channel (M x N): P_a paths, LoS first."""
    count = cfg.paths_direct
    aod_az, aod_el = _draw_angles(rng, count)
    aoa_az, aoa_el = _draw_angles(rng, count)
    d_los = float(np.linalg.norm(np.asarray(ue_position) - np.asarray(cfg.bs_position)))
    dists = _path_distances(rng, d_los, count)
    gains = _draw_gains(rng, _pathloss(cfg, cfg.ref_gain_direct, dists))
    paths = [
        PathSpec(gains[p], aoa_az[p], aoa_el[p], aod_az[p], aod_el[p])
        for p in range(count)
    ]
    return assemble_path_sum(paths, cfg.bs_geometry, cfg.ue_geometry)


@dataclass(frozen=True, eq=False)
class BsRisGeometryDraw:
    """BS->RIS path geometry, shared by all UEs of one trial."""

    aod_az: np.ndarray  # departure at the BS
    aod_el: np.ndarray
    aoa_az: np.ndarray  # arrival at the RIS
    aoa_el: np.ndarray
    distances: np.ndarray


def draw_bs_ris_geometry(cfg, rng):
    count = cfg.paths_bs_ris
    aod_az, aod_el = _draw_angles(rng, count)
    aoa_az, aoa_el = _draw_angles(rng, count)
    d_los = float(np.linalg.norm(np.asarray(cfg.ris_position) - np.asarray(cfg.bs_position)))
    dists = _path_distances(rng, d_los, count)
    return BsRisGeometryDraw(aod_az, aod_el, aoa_az, aoa_el, dists)


def draw_ris_tensor(cfg, ue_position, bs_ris, response, rng):
    """RIS channel tensor (M x L x N) for one UE.

    ``bs_ris`` carries the trial-shared BS->RIS path geometry; this call draws
    the RIS->UE paths and the per-pair composite gains from ``rng``.  The
    gain variance of pair (pb, pc) is the sum of the two hop pathloss terms,
    each with its own LoS/NLoS exponent.
    """
    pb, pc = cfg.paths_bs_ris, cfg.paths_ris_ue
    out_az, out_el = _draw_angles(rng, pc)  # departure at the RIS
    ue_az, ue_el = _draw_angles(rng, pc)  # arrival at the UE
    d_los = float(np.linalg.norm(np.asarray(ue_position) - np.asarray(cfg.ris_position)))
    d_ru = _path_distances(rng, d_los, pc)

    loss_br = _pathloss(cfg, cfg.ref_gain_bs_ris, bs_ris.distances)
    loss_ru = _pathloss(cfg, cfg.ref_gain_ris_ue, d_ru)
    variances = loss_br[:, None] + loss_ru[None, :]
    gains = _draw_gains(rng, variances)

    bs_steer = np.stack(
        [upa_response(cfg.bs_geometry, bs_ris.aod_az[p], bs_ris.aod_el[p]) for p in range(pb)],
        axis=1,
    )
    ris_in = np.stack(
        [upa_response(cfg.ris_geometry, bs_ris.aoa_az[p], bs_ris.aoa_el[p]) for p in range(pb)],
        axis=1,
    )
    ris_out = np.stack(
        [upa_response(cfg.ris_geometry, out_az[p], out_el[p]) for p in range(pc)],
        axis=1,
    )
    ue_steer = np.stack(
        [upa_response(cfg.ue_geometry, ue_az[p], ue_el[p]) for p in range(pc)],
        axis=1,
    )
    omega = response.matrix(bs_ris.aoa_az, bs_ris.aoa_el, out_az, out_el)
    return assemble_ris_tensor(bs_steer, ris_in, ris_out, ue_steer, gains * omega)


def draw_ue_positions(cfg, rng):
    if cfg.ue_positions is not None:
        return np.asarray(cfg.ue_positions, dtype=float)
    x0, x1, y0, y1 = cfg.ue_area
    xy = rng.uniform([x0, y0], [x1, y1], size=(cfg.num_ues, 2))
    pos = np.empty((cfg.num_ues, 3))
    pos[:, :2] = xy
    pos[:, 2] = cfg.ue_height
    return pos


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One Monte-Carlo draw: per-UE direct matrices and RIS tensors.

    ``concatenated(k)`` prepends the direct channel as slab 0 of the RIS
    tensor, so contracting axis 2 with [1; phi] gives the overall channel.
    """

    cfg: ScenarioConfig
    direct: tuple
    ris: tuple
    ue_positions: np.ndarray = None

    def concatenated(self, k):
        h_d = self.direct[k]
        t = self.ris[k]
        return np.concatenate([h_d[:, None, :], t], axis=1)

    @property
    def num_ris_elements(self):
        return self.ris[0].shape[1]


def draw_realization(cfg, trial=0, axis_index=0, response=None):
    """Draw one full realization using per-(trial, ue, link) substreams."""
    if response is None:
        response = RisResponseModel()
    root = cfg.rng_seed
    pos_rng = substream(root, axis_index, trial, 0, LINK_UE_POS)
    positions = draw_ue_positions(cfg, pos_rng)
    bs_ris = draw_bs_ris_geometry(cfg, substream(root, axis_index, trial, 0, LINK_BS_RIS))
    direct = []
    ris = []
    for k in range(cfg.num_ues):
        direct.append(
            draw_direct_channel(cfg, positions[k], substream(root, axis_index, trial, k, LINK_DIRECT))
        )
        ris.append(
            draw_ris_tensor(
                cfg, positions[k], bs_ris, response,
                substream(root, axis_index, trial, k, LINK_RIS_UE),
            )
        )
    return ChannelRealization(cfg, tuple(direct), tuple(ris), positions)


def effective_channel(realization, k, phi):
    """Overall channel H_k = H_d[k] + (RIS tensor contracted with phi)."""
    t = realization.ris[k]
    phi = np.asarray(phi)
    if phi.shape != (t.shape[1],):
        raise DimensionError(
            f"phi has length {phi.shape}, RIS tensor expects {t.shape[1]}"
        )
    return realization.direct[k] + mode_product(t, phi, 2)


def zero_ris(realization):
    """Realization with the RIS tensor removed (direct channel only)."""
    zeros = tuple(np.zeros_like(t) for t in realization.ris)
    return replace(realization, ris=zeros)


def zero_direct(realization):
    """Realization with the direct paths blocked (RIS-only channel)."""
    zeros = tuple(np.zeros_like(h) for h in realization.direct)
    return replace(realization, direct=zeros)
