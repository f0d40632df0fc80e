"""Run configuration and the command implementations behind the CLI.

Every command takes a validated :class:`RunConfig`. Validation happens
entirely before any output is written. All randomness derives from
``RunConfig.seed``.

Output layout under ``RunConfig.output``::

    bases/gc-<graph_hash>.gct         cached graph basis U (rows)
    bases/sc-<key>.gct                fitted SC matrix (fit-basis)
    features/<KIND>-<key>/<clip>.gct  one feature matrix per clip
    models/<KIND>.json                trained scene models
    reports/...                       evaluation, basis and sweep reports
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, clip_filename, load_manifest, load_wav, write_wav
from .dsp import StftParams, channel_log_vectors, freq_log_vectors, stft_with
from .errors import ConfigError, ContractError, DataError
from .features import (
    DEFAULT_ORDER,
    KINDS,
    FeatureSequence,
    PcaBasis,
    cepstrum,
    fit_pca_basis,
    graph_cepstrum,
    similarity_table,
    spatial_cepstrum,
)
from .fixtures import fixture_graph, fixture_scenes
from .gmm import GmmModel, confusion_report, evaluate, scene_logliks, train_gmm
from .graph import GraphBasis, MicGraph, graph_basis
from .sync_sim import DesyncSpec, SceneSpec, derive_seed, inject_desync, load_scene_specs, synthesize_scene
from .tensor_io import load_json, load_tensor, save_csv, save_json, save_rows, save_tensor, sidecar_path

log = logging.getLogger(__name__)

SEED_ENV = "GRAPHCEPS_SEED"
DATASET_FILE = "dataset.json"
SPLITS = ("train", "test")
# stream tags keep synthesis and sweep draws independent of each other
_SYNTH_TAG = {"train": 101, "test": 202}
_SWEEP_TAG = 303

DEFAULTS: dict = {
    "dataset": "data",
    "output": "out",
    "seed": 0,
    "workers": 1,
    "graph": None,
    "features": {"kinds": ["GC", "SC", "CEP"], "order": DEFAULT_ORDER, "normalize": False, "centered": False},
    "stft": {"frame_len": 960, "fft_size": 2048, "hop": None, "window": "hann"},
    "gmm": {"m": 8, "max_iter": 200},
    "synth": {"scenes": "fixture", "sample_rate": 48000, "clip_s": 8.0, "n_train": 200, "n_test": 100},
    "sweep": {"sigmas_ms": [0, 5, 10, 20, 50, 100], "repetitions": 10, "kinds": ["GC", "SC", "CEP"]},
    "report": {"alphas": [1.0, 0.1, 0.01]},
}


def _merge(base: dict, update: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and key != "graph":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _resolve(path, root: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else root / p


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _int(value, name: str, lo: int = 1) -> int:
    _check(isinstance(value, int) and not isinstance(value, bool) and value >= lo, f"{name} must be an integer >= {lo}, got {value!r}")
    return int(value)


def _pos(value, name: str) -> float:
    _check(isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value) and value > 0, f"{name} must be a positive number, got {value!r}")
    return float(value)


def _kinds(value, name: str) -> tuple[str, ...]:
    _check(isinstance(value, list) and len(value) > 0, f"{name} must be a non-empty list")
    bad = [k for k in value if k not in KINDS]
    _check(not bad, f"{name}: unknown feature kinds {bad}; choose from {list(KINDS)}")
    return tuple(dict.fromkeys(value))


@dataclass(frozen=True)
class RunConfig:
    dataset: Path
    output: Path
    seed: int
    workers: int
    graph: MicGraph | None
    kinds: tuple[str, ...]
    order: int
    normalize: bool
    centered: bool
    stft: StftParams
    gmm_m: int
    gmm_max_iter: int
    scenes: tuple[SceneSpec, ...]
    sample_rate: float
    clip_s: float
    n_train: int
    n_test: int
    sigmas_ms: tuple[float, ...]
    repetitions: int
    sweep_kinds: tuple[str, ...]
    alphas: tuple[float, ...]
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, data: dict, root: Path | str = ".", env: dict | None = None) -> "RunConfig":
        """Merge ``data`` over the defaults and validate every field.

        Relative paths resolve against ``root``. ``GRAPHCEPS_SEED`` in
        ``env`` (default ``os.environ``) replaces the configured seed.
        """
        root = Path(root)
        env = os.environ if env is None else env
        _check(isinstance(data, dict), "config must be a JSON object")
        cfg = _merge(DEFAULTS, data)
        if env.get(SEED_ENV) not in (None, ""):
            try:
                cfg["seed"] = int(env[SEED_ENV])
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from exc

        seed = _int(cfg["seed"], "seed", 0)
        workers = _int(cfg["workers"], "workers")

        graph = None
        g = cfg["graph"]
        if g == "fixture":
            graph = fixture_graph()
        elif isinstance(g, dict):
            graph = MicGraph.from_dict(g)
        elif isinstance(g, str):
            path = _resolve(g, root)
            _check(path.is_file(), f"graph config {path} does not exist")
            graph = MicGraph.load(path)
        elif g is not None:
            raise ConfigError("graph must be a path, an inline object or \"fixture\"")

        f = cfg["features"]
        kinds = _kinds(f["kinds"], "features.kinds")
        order = _int(f["order"], "features.order")
        _check(isinstance(f["normalize"], bool), "features.normalize must be true or false")
        _check(isinstance(f["centered"], bool), "features.centered must be true or false")

        s = cfg["stft"]
        try:
            params = StftParams(
                _int(s["frame_len"], "stft.frame_len"),
                _int(s["fft_size"], "stft.fft_size"),
                None if s["hop"] is None else _int(s["hop"], "stft.hop"),
                s["window"],
            )
        except ContractError as exc:
            raise ConfigError(f"stft: {exc}") from exc
        _check(order <= params.fft_size // 2 + 1 or "CEP" not in kinds, f"features.order {order} exceeds the {params.fft_size // 2 + 1} frequency bins")

        m = _int(cfg["gmm"]["m"], "gmm.m")
        max_iter = _int(cfg["gmm"]["max_iter"], "gmm.max_iter")

        syn = cfg["synth"]
        if syn["scenes"] == "fixture":
            scenes = tuple(fixture_scenes())
        elif isinstance(syn["scenes"], str):
            path = _resolve(syn["scenes"], root)
            _check(path.is_file(), f"scene spec file {path} does not exist")
            try:
                scenes = tuple(load_scene_specs(path))
            except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ConfigError(f"cannot read scene specs {path}: {exc}") from exc
        else:
            raise ConfigError("synth.scenes must be \"fixture\" or a path")
        _check(len(scenes) > 0, "synth.scenes is empty")
        labels = [sc.scene_label for sc in scenes]
        _check(len(set(labels)) == len(labels), f"duplicate scene labels in {labels}")

        sw = cfg["sweep"]
        _check(isinstance(sw["sigmas_ms"], list) and sw["sigmas_ms"], "sweep.sigmas_ms must be a non-empty list")
        for v in sw["sigmas_ms"]:
            _check(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v >= 0, f"sweep.sigmas_ms entries must be >= 0, got {v!r}")
        alphas = cfg["report"]["alphas"]
        _check(isinstance(alphas, list) and alphas, "report.alphas must be a non-empty list")
        for a in alphas:
            _check(isinstance(a, (int, float)) and not isinstance(a, bool) and 0 <= a <= 1, f"report.alphas entries must lie in [0, 1], got {a!r}")

        return cls(
            dataset=_resolve(cfg["dataset"], root),
            output=_resolve(cfg["output"], root),
            seed=seed,
            workers=workers,
            graph=graph,
            kinds=kinds,
            order=order,
            normalize=f["normalize"],
            centered=f["centered"],
            stft=params,
            gmm_m=m,
            gmm_max_iter=max_iter,
            scenes=scenes,
            sample_rate=_pos(syn["sample_rate"], "synth.sample_rate"),
            clip_s=_pos(syn["clip_s"], "synth.clip_s"),
            n_train=_int(syn["n_train"], "synth.n_train"),
            n_test=_int(syn["n_test"], "synth.n_test"),
            sigmas_ms=tuple(float(v) for v in sw["sigmas_ms"]),
            repetitions=_int(sw["repetitions"], "sweep.repetitions"),
            sweep_kinds=_kinds(sw["kinds"], "sweep.kinds"),
            alphas=tuple(float(a) for a in alphas),
            raw=cfg,
        )

    @classmethod
    def load(cls, path, overrides: dict | None = None, env: dict | None = None) -> "RunConfig":
        """Read a JSON config; ``overrides`` maps dotted keys to values."""
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(apply_overrides(data, overrides or {}), path.parent, env)

    def require_graph(self, why: str) -> MicGraph:
        if self.graph is None:
            raise ConfigError(f"{why} needs a microphone graph; set \"graph\" in the config or pass --graph")
        return self.graph


def apply_overrides(data: dict, overrides: dict) -> dict:
    data = copy.deepcopy(data)
    for dotted, value in overrides.items():
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return data


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- dataset


@dataclass(frozen=True)
class ClipEntry:
    clip_id: str
    path: Path
    split: str
    scene_label: str


@dataclass(frozen=True)
class Dataset:
    root: Path
    sample_rate: float
    n_channels: int
    clips: tuple[ClipEntry, ...]
    fingerprint: str

    def split(self, name: str) -> list[ClipEntry]:
        return [c for c in self.clips if c.split == name]


def load_dataset(root: Path) -> Dataset:
    """Read ``dataset.json``: ``{sample_rate, n_channels, clips: [{id, path, split, scene_label}]}``.

    A clip path may name an interleaved WAV or a per-channel JSON manifest.
    """
    index = Path(root) / DATASET_FILE
    if not index.is_file():
        raise ConfigError(f"no dataset at {root} (missing {DATASET_FILE}); run `graphceps synth` first")
    blob = index.read_bytes()
    try:
        d = json.loads(blob)
        clips = tuple(
            ClipEntry(str(c["id"]), Path(root) / c["path"], str(c["split"]), str(c["scene_label"]))
            for c in d["clips"]
        )
        rate, n_ch = float(d["sample_rate"]), int(d["n_channels"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{index}: malformed dataset index ({exc})") from exc
    ids = [c.clip_id for c in clips]
    if len(set(ids)) != len(ids):
        raise DataError(f"{index}: duplicate clip ids")
    for c in clips:
        if c.split not in SPLITS:
            raise DataError(f"{index}: clip {c.clip_id} has unknown split {c.split!r}")
        if not c.clip_id or any(ch in c.clip_id for ch in "/\\") or c.clip_id.startswith("."):
            raise DataError(f"{index}: clip id {c.clip_id!r} is not a safe file name")
        if not c.path.is_file():
            raise DataError(f"{index}: clip file {c.path} is missing")
    return Dataset(Path(root), rate, n_ch, clips, hashlib.sha256(blob).hexdigest()[:16])


def read_clip(entry_path: Path, expect_rate: float | None = None, expect_channels: int | None = None) -> AudioClip:
    path = Path(entry_path)
    clip = load_manifest(path) if path.suffix.lower() == ".json" else load_wav(path)
    if expect_rate is not None and clip.sample_rate != expect_rate:
        raise DataError(f"{path}: sample rate {clip.sample_rate} != dataset {expect_rate}")
    if expect_channels is not None and clip.n_channels != expect_channels:
        raise DataError(f"{path}: {clip.n_channels} channels, dataset declares {expect_channels}")
    return clip


def _map(fn, jobs, workers: int):
    """Order-preserving map, in a process pool when ``workers > 1``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# ------------------------------------------------------------------ synth


def _synth_job(job):
    spec, duration, rate, seed, path = job
    write_wav(path, synthesize_scene(spec, duration, rate, seed))
    return path.name


def cmd_synth(cfg: RunConfig) -> dict:
    """Render the train/test clips of the configured scenes into ``cfg.dataset``."""
    n_mics = {len(sc.mic_positions) for sc in cfg.scenes}
    if len(n_mics) != 1:
        raise ConfigError(f"scene specs disagree on microphone count: {sorted(n_mics)}")
    if cfg.graph is not None and cfg.graph.n not in n_mics:
        raise ConfigError(f"graph has {cfg.graph.n} channels but scenes have {n_mics.pop()} microphones")
    root = cfg.dataset
    jobs, clips = [], []
    for split, count in (("train", cfg.n_train), ("test", cfg.n_test)):
        for i in range(count):
            spec = cfg.scenes[i % len(cfg.scenes)]
            name = clip_filename(split, i)
            seed = derive_seed(cfg.seed, _SYNTH_TAG[split], i)
            jobs.append((spec, cfg.clip_s, cfg.sample_rate, seed, root / "wav" / name))
            clips.append({"id": name[: -len(".wav")], "path": f"wav/{name}", "split": split, "scene_label": spec.scene_label})
    _map(_synth_job, jobs, cfg.workers)
    save_json(root / "scenes.json", {"scenes": [sc.to_dict() for sc in cfg.scenes]})
    index = {
        "sample_rate": cfg.sample_rate,
        "n_channels": n_mics.pop() if n_mics else 0,
        "clip_s": cfg.clip_s,
        "seed": cfg.seed,
        "clips": clips,
    }
    save_json(root / DATASET_FILE, index)
    log.info("wrote %d clips to %s", len(clips), root)
    return {"dataset": str(root), "clips": len(clips)}


# ---------------------------------------------------------------- features


def clip_logs(clip: AudioClip, params: StftParams, want_q: bool, want_p: bool):
    """Channel (T x N) and frequency (T x Omega) log-amplitude matrices from one STFT."""
    t = stft_with(clip, params)
    q = channel_log_vectors(t) if want_q else None
    p = freq_log_vectors(t) if want_p else None
    return q, p


def normalize_frames(values: np.ndarray) -> np.ndarray:
    """Z-score each frame across its coefficients (constant frames map to zero)."""
    mu = values.mean(axis=1, keepdims=True)
    sd = values.std(axis=1, keepdims=True)
    return np.divide(values - mu, sd, out=np.zeros_like(values), where=sd > 0)


@dataclass(frozen=True)
class FeatureSpec:
    """Everything needed to turn log-amplitude matrices into one feature kind."""

    kind: str
    order: int
    normalize: bool
    gc: GraphBasis | None = None
    sc: PcaBasis | None = None

    @property
    def basis_hash(self) -> str:
        if self.kind == "GC":
            return self.gc.graph_hash
        if self.kind == "SC":
            return self.sc.hash
        return "idft"

    def compute(self, q, p, source: str = "") -> FeatureSequence:
        if self.kind == "GC":
            seq = graph_cepstrum(q, self.gc, self.order)
        elif self.kind == "SC":
            seq = spatial_cepstrum(q, self.sc, self.order)
        else:
            seq = cepstrum(p, self.order)
        values = normalize_frames(seq.values) if self.normalize else seq.values
        return FeatureSequence(values, self.kind, source)


def _need(specs) -> tuple[bool, bool]:
    kinds = {s.kind for s in specs}
    return bool(kinds & {"GC", "SC"}), "CEP" in kinds


def gc_basis(cfg: RunConfig, graph: MicGraph | None = None, save: bool = True) -> GraphBasis:
    """Graph basis, cached under ``bases/`` by graph hash."""
    graph = graph or cfg.require_graph("GC features")
    path = cfg.output / "bases" / f"gc-{graph.hash}.gct"
    if path.is_file():
        meta = load_json(sidecar_path(path))
        return GraphBasis(load_tensor(path), np.array(meta["eigenvalues"]), graph.hash)
    basis = graph_basis(graph)
    if save:
        save_gc_basis(cfg, graph, basis)
    return basis


def save_gc_basis(cfg: RunConfig, graph: MicGraph, basis: GraphBasis) -> None:
    path = cfg.output / "bases" / f"gc-{graph.hash}.gct"
    if not path.is_file():
        meta = {"kind": "IGFT", "graph": graph.to_dict(), "graph_hash": graph.hash, "eigenvalues": basis.lam.tolist()}
        save_tensor(path, basis.u, meta)


def sc_basis_path(cfg: RunConfig, ds: Dataset) -> Path:
    key = _digest({"dataset": ds.fingerprint, "stft": _stft_dict(cfg.stft), "centered": cfg.centered})
    return cfg.output / "bases" / f"sc-{key}.gct"


def load_sc_basis(cfg: RunConfig, ds: Dataset) -> PcaBasis:
    path = sc_basis_path(cfg, ds)
    if not path.is_file():
        raise ConfigError("SC features need a fitted PCA basis; run `graphceps fit-basis` first")
    meta = load_json(sidecar_path(path))
    mean = None if meta["mean"] is None else np.array(meta["mean"])
    return PcaBasis(load_tensor(path), np.array(meta["eigenvalues"]), meta["frames_used"], meta["centered"], mean)


def _stft_dict(p: StftParams) -> dict:
    return {"frame_len": p.frame_len, "fft_size": p.fft_size, "hop": p.hop, "window": p.window}


def feature_specs(cfg: RunConfig, ds: Dataset, kinds) -> list[FeatureSpec]:
    """Resolve bases for ``kinds``. Checks everything before caching a new graph basis."""
    for kind in kinds:
        limit = ds.n_channels if kind != "CEP" else cfg.stft.fft_size // 2 + 1
        if cfg.order > limit:
            raise ConfigError(f"features.order {cfg.order} exceeds the {limit} available {kind} coefficients")
        if kind == "GC":
            graph = cfg.require_graph("kind=GC")
            if graph.n != ds.n_channels:
                raise ConfigError(f"graph has {graph.n} channels, dataset clips have {ds.n_channels}")
    sc = load_sc_basis(cfg, ds) if "SC" in kinds else None
    specs = []
    for kind in kinds:
        if kind == "GC":
            specs.append(FeatureSpec(kind, cfg.order, cfg.normalize, gc=gc_basis(cfg)))
        elif kind == "SC":
            specs.append(FeatureSpec(kind, cfg.order, cfg.normalize, sc=sc))
        else:
            specs.append(FeatureSpec(kind, cfg.order, cfg.normalize))
    return specs


def feature_dir(cfg: RunConfig, ds: Dataset, spec: FeatureSpec) -> Path:
    key = _digest(
        {
            "dataset": ds.fingerprint,
            "stft": _stft_dict(cfg.stft),
            "kind": spec.kind,
            "order": spec.order,
            "normalize": spec.normalize,
            "basis": spec.basis_hash,
        }
    )
    return cfg.output / "features" / f"{spec.kind}-{key}"


def _extract_job(job):
    path, rate, n_ch, params, specs = job
    clip = read_clip(path, rate, n_ch)
    want_q, want_p = _need(specs)
    q, p = clip_logs(clip, params, want_q, want_p)
    return [s.compute(q, p).values for s in specs]


def cmd_extract(cfg: RunConfig, kinds=None, force: bool = False) -> dict:
    """Write one feature file per clip and kind; existing files are reused unless ``force``."""
    ds = load_dataset(cfg.dataset)
    specs = feature_specs(cfg, ds, kinds or cfg.kinds)
    dirs = [feature_dir(cfg, ds, s) for s in specs]
    todo = [
        c
        for c in ds.clips
        if force or not all((d / f"{c.clip_id}.gct").is_file() for d in dirs)
    ]
    results = _map(_extract_job, [(c.path, ds.sample_rate, ds.n_channels, cfg.stft, specs) for c in todo], cfg.workers)
    for clip, values in zip(todo, results):
        for spec, d, v in zip(specs, dirs, values):
            meta = {"kind": spec.kind, "order": spec.order, "basis_hash": spec.basis_hash, "clip_id": clip.clip_id,
                    "scene_label": clip.scene_label, "split": clip.split, "normalized": spec.normalize}
            save_tensor(d / f"{clip.clip_id}.gct", v, meta)
    log.info("extracted %d clips x %d kinds", len(todo), len(specs))
    return {s.kind: {"dir": str(d), "files": len(ds.clips)} for s, d in zip(specs, dirs)}


def load_features(cfg: RunConfig, ds: Dataset, spec: FeatureSpec, split: str):
    """``[(FeatureSequence, label)]`` for one split, extracting anything missing first."""
    d = feature_dir(cfg, ds, spec)
    clips = ds.split(split)
    if not clips:
        raise DataError(f"dataset has no {split!r} clips")
    if not all((d / f"{c.clip_id}.gct").is_file() for c in clips):
        cmd_extract(cfg, [spec.kind])
    return [(FeatureSequence(load_tensor(d / f"{c.clip_id}.gct"), spec.kind, c.clip_id), c.scene_label) for c in clips]


# ------------------------------------------------------------------- bases


def cmd_fit_basis(cfg: RunConfig) -> dict:
    """Fit the SC matrix on the training split's channel log-amplitude frames."""
    ds = load_dataset(cfg.dataset)
    train = ds.split("train")
    if not train:
        raise DataError("dataset has no training clips")
    jobs = [(c.path, ds.sample_rate, ds.n_channels, cfg.stft) for c in train]
    qs = _map(_q_job, jobs, cfg.workers)
    basis = fit_pca_basis(np.vstack(qs), centered=cfg.centered)
    path = sc_basis_path(cfg, ds)
    meta = {
        "kind": "PCA",
        "eigenvalues": basis.eigvals.tolist(),
        "frames_used": basis.frames_used,
        "centered": basis.centered,
        "mean": None if basis.mean is None else basis.mean.tolist(),
        "hash": basis.hash,
        "dataset": ds.fingerprint,
    }
    save_tensor(path, basis.e_t, meta)
    return {"basis": str(path), "frames_used": basis.frames_used}


def _q_job(job):
    path, rate, n_ch, params = job
    return clip_logs(read_clip(path, rate, n_ch), params, True, False)[0]


def _alpha_name(alpha: float) -> str:
    return f"IGFT(alpha={alpha!r})"


def cmd_basis_report(cfg: RunConfig) -> dict:
    """CSV grids of U for every configured alpha, the SC matrix when fitted, and the similarity table."""
    graph = cfg.require_graph("basis-report")
    sc = None
    if (cfg.dataset / DATASET_FILE).is_file():
        ds = load_dataset(cfg.dataset)
        if sc_basis_path(cfg, ds).is_file():
            sc = load_sc_basis(cfg, ds)
            if sc.n != graph.n:
                raise ConfigError(f"SC basis has {sc.n} channels, graph has {graph.n}")
    graphs = [graph.with_alpha(a) for a in cfg.alphas]
    bases = [gc_basis(cfg, g, save=False) for g in graphs]
    named = {_alpha_name(a): b.u for a, b in zip(cfg.alphas, bases)}
    if sc is not None:
        named["SC"] = sc.e_t
    names, table = similarity_table(named)

    out = cfg.output / "reports" / "basis"
    cols = [f"ch{i}" for i in range(graph.n)]
    rows = [f"u{k}" for k in range(graph.n)]
    files = []
    for alpha, g, b in zip(cfg.alphas, graphs, bases):
        save_gc_basis(cfg, g, b)
        name = out / f"igft_alpha-{alpha!r}.csv"
        save_csv(name, b.u, cols, rows)
        save_csv(out / f"igft_alpha-{alpha!r}_eigenvalues.csv", b.lam[:, None], ["lambda"], rows)
        files.append(str(name))
    if sc is not None:
        erows = [f"e{k}" for k in range(graph.n)]
        save_csv(out / "sc.csv", sc.e_t, cols, erows)
        save_csv(out / "sc_eigenvalues.csv", sc.eigvals[:, None], ["eigenvalue"], erows)
        files.append(str(out / "sc.csv"))
    save_csv(out / "similarity.csv", table, names, names)
    save_json(out / "similarity.json", {"names": names, "table": table.tolist(), "graph_hash": graph.hash})
    return {"grids": files, "similarity": str(out / "similarity.csv"), "names": names, "table": table.tolist()}


# ---------------------------------------------------------- train / score


def model_path(cfg: RunConfig, kind: str) -> Path:
    return cfg.output / "models" / f"{kind}.json"


def _training_config(cfg: RunConfig, ds: Dataset, spec: FeatureSpec) -> dict:
    return {
        "m": cfg.gmm_m,
        "seed": cfg.seed,
        "max_iter": cfg.gmm_max_iter,
        "covariance": "diag",
        "feature_key": feature_dir(cfg, ds, spec).name,
        "basis_hash": spec.basis_hash,
    }


def cmd_train(cfg: RunConfig, kinds=None) -> dict:
    ds = load_dataset(cfg.dataset)
    specs = feature_specs(cfg, ds, kinds or cfg.kinds)
    out = {}
    for spec in specs:
        data = load_features(cfg, ds, spec, "train")
        model = train_gmm(data, m=cfg.gmm_m, seed=cfg.seed, max_iter=cfg.gmm_max_iter)
        model.training_config = _training_config(cfg, ds, spec)
        path = model_path(cfg, spec.kind)
        model.save(path)
        save_json(cfg.output / "reports" / f"train-{spec.kind}-history.json", model.history)
        out[spec.kind] = str(path)
    return out


def load_model(cfg: RunConfig, ds: Dataset, spec: FeatureSpec) -> GmmModel:
    path = model_path(cfg, spec.kind)
    if not path.is_file():
        raise ConfigError(f"no {spec.kind} model at {path}; run `graphceps train` first")
    model = GmmModel.load(path)
    if model.training_config != _training_config(cfg, ds, spec):
        raise ConfigError(f"{path} was trained with different settings; rerun `graphceps train`")
    return model


def cmd_evaluate(cfg: RunConfig, kinds=None) -> dict:
    ds = load_dataset(cfg.dataset)
    specs = feature_specs(cfg, ds, kinds or cfg.kinds)
    models = [load_model(cfg, ds, s) for s in specs]
    out = {}
    for spec, model in zip(specs, models):
        test = load_features(cfg, ds, spec, "test")
        result = evaluate(model, test)
        report = result.to_dict()
        report["clip_ids"] = [seq.source for seq, _ in test]
        report["kind"] = spec.kind
        rdir = cfg.output / "reports"
        save_json(rdir / f"eval-{spec.kind}.json", report)
        save_csv(rdir / f"confusion-{spec.kind}.csv", result.confusion, result.labels, result.labels)
        out[spec.kind] = result.accuracy
    return out


def cmd_classify(cfg: RunConfig, paths, kinds=None) -> list[dict]:
    """Classify standalone clips (WAV or manifest). Nothing is written."""
    ds = load_dataset(cfg.dataset)
    specs = feature_specs(cfg, ds, kinds or cfg.kinds)
    models = [load_model(cfg, ds, s) for s in specs]
    want_q, want_p = _need(specs)
    rows = []
    for path in paths:
        path = Path(path)
        if not path.is_file():
            raise DataError(f"{path} does not exist")
        clip = read_clip(path, ds.sample_rate, ds.n_channels)
        q, p = clip_logs(clip, cfg.stft, want_q, want_p)
        for spec, model in zip(specs, models):
            ll = scene_logliks(model, spec.compute(q, p, str(path)))
            best = int(np.argmax(ll))
            rows.append({"clip": str(path), "kind": spec.kind, "label": model.scenes[best],
                         "loglik": dict(zip(model.scenes, ll.tolist()))})
    return rows


# ------------------------------------------------------------------- sweep


def _sweep_job(job):
    """Predicted scene index for every (sigma, repetition, kind) of one test clip."""
    path, rate, n_ch, params, groups, sigmas, seeds, specs, models = job
    clip = read_clip(path, rate, n_ch)
    want_q, want_p = _need(specs)
    pred = np.zeros((len(sigmas), len(seeds), len(specs)), dtype=np.int64)
    for si, sigma in enumerate(sigmas):
        for ri, seed in enumerate(seeds):
            shifted, _ = inject_desync(clip, DesyncSpec(groups, sigma, seed))
            q, p = clip_logs(shifted, params, want_q, want_p)
            for ki, (spec, model) in enumerate(zip(specs, models)):
                pred[si, ri, ki] = int(np.argmax(scene_logliks(model, spec.compute(q, p))))
    return pred


def cmd_sweep(cfg: RunConfig, kinds=None) -> dict:
    """Accuracy versus inter-group offset spread.

    Each repetition draws the per-clip offsets from seeds that depend on
    (seed, repetition, clip) but not on sigma, so within one repetition
    the offsets of every sigma are the same standard-normal draws scaled
    by sigma. With sigma = 0 the clips are untouched and the accuracy
    equals ``evaluate``.
    """
    graph = cfg.require_graph("sweep")
    ds = load_dataset(cfg.dataset)
    specs = feature_specs(cfg, ds, kinds or cfg.sweep_kinds)
    models = [load_model(cfg, ds, s) for s in specs]
    if graph.n != ds.n_channels:
        raise ConfigError(f"graph has {graph.n} channels, dataset clips have {ds.n_channels}")
    if not graph.groups:
        raise ConfigError("sweep needs microphone groups in the graph config")
    test = ds.split("test")
    if not test:
        raise DataError("dataset has no test clips")
    for m in models:
        missing = {c.scene_label for c in test} - set(m.scenes)
        if missing:
            raise DataError(f"test scenes {sorted(missing)} were not trained")
    sigmas = [v / 1000.0 for v in cfg.sigmas_ms]
    jobs = [
        (c.path, ds.sample_rate, ds.n_channels, cfg.stft, graph.groups, sigmas,
         [derive_seed(cfg.seed, _SWEEP_TAG, r, i) for r in range(cfg.repetitions)], specs, models)
        for i, c in enumerate(test)
    ]
    preds = np.stack(_map(_sweep_job, jobs, cfg.workers))  # clips x sigmas x reps x kinds
    long_rows, summary_rows, accs = [], [], {}
    for ki, (spec, model) in enumerate(zip(specs, models)):
        truth = [c.scene_label for c in test]
        acc = np.zeros((len(sigmas), cfg.repetitions))
        for si in range(len(sigmas)):
            for ri in range(cfg.repetitions):
                predicted = [model.scenes[j] for j in preds[:, si, ri, ki]]
                acc[si, ri] = confusion_report(truth, predicted, model.scenes).accuracy
                long_rows.append({"kind": spec.kind, "sigma_ms": cfg.sigmas_ms[si], "repetition": ri,
                                  "accuracy": repr(float(acc[si, ri])), "n_clips": len(test)})
            summary_rows.append({"kind": spec.kind, "sigma_ms": cfg.sigmas_ms[si],
                                 "mean_accuracy": repr(float(acc[si].mean())),
                                 "std_accuracy": repr(float(acc[si].std(ddof=1)) if cfg.repetitions > 1 else 0.0),
                                 "repetitions": cfg.repetitions})
        accs[spec.kind] = acc
    rdir = cfg.output / "reports"
    save_rows(rdir / "sweep_long.csv", ["kind", "sigma_ms", "repetition", "accuracy", "n_clips"], long_rows)
    save_rows(rdir / "sweep_summary.csv", ["kind", "sigma_ms", "mean_accuracy", "std_accuracy", "repetitions"], summary_rows)
    drops = {k: (a[0] - a[-1]).tolist() for k, a in accs.items()}
    summary = {
        "sigmas_ms": list(cfg.sigmas_ms),
        "repetitions": cfg.repetitions,
        "accuracy": {k: a.tolist() for k, a in accs.items()},
        "drop_first_to_last": drops,
    }
    if "GC" in drops and "SC" in drops:
        summary["gc_drop_smaller_than_sc"] = int(sum(g < s for g, s in zip(drops["GC"], drops["SC"])))
    save_json(rdir / "sweep.json", summary)
    return summary
