"""Config-driven simulation experiments and their result documents.

A config is a flat ``key = value`` file::

    experiment = fbs-memory
    states = -,1
    rounds = 16
    shots = 100000
    p_m = 0.02

Lists of state labels are separated by ``;`` (labels themselves contain a
comma).  Every experiment returns a JSON-serialisable dict.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import tomo
from .bs import BS_GATES, bs_mode_circuits, run_bs
from .circuits import (LOWERINGS, STATES, all_labels, build_experiment, ideal_value,
                       parse_label)
from .fbs import build_code
from .fitting import fit_exp_decay, fit_trig
from .noise import COMPONENTS, NoiseModel, error_budget
from .runner import BACKENDS, exact_expectations, run_experiment, sample_values

KINDS = ("encode-fidelity", "fbs-memory", "pauli-gates", "rotation-sweep", "cnot-bell",
         "lqpt-cnot", "bs-memory", "bs-gates", "error-budget")
POSTS = ("raw", "detect", "correct")
# per-experiment defaults applied before the config file
KIND_DEFAULTS = {"encode-fidelity": {"rounds": 0}, "fbs-memory": {"rounds": 12},
                 "bs-memory": {"rounds": 6, "shots": 20_000}, "bs-gates": {"rounds": 2, "shots": 20_000},
                 "lqpt-cnot": {"shots": 20_000}}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    states: tuple = ()
    rounds: int = 4
    shots: int = 100_000
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    backend: str = "auto"
    post: str = "detect"
    lowering: str = "ancilla"
    basis: str = ""
    gate: str = "RZd"
    angles: int = 13
    gates: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment {self.kind!r}; expected one of {KINDS}")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        if self.post not in POSTS:
            raise ConfigError(f"post must be one of {POSTS}")
        if self.post == "correct" and not self.kind.startswith("bs-"):
            raise ConfigError("error correction is only available for the BS experiments")
        if self.lowering not in LOWERINGS:
            raise ConfigError(f"lowering must be one of {LOWERINGS}")


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse flat ``key = value`` text; ``overrides`` win over file values."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    raw = dict(cp["run"])
    raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    kind = raw.pop("experiment", raw.pop("kind", None))
    if kind is None:
        raise ConfigError("config needs an 'experiment' key")
    rates = {k: float(raw.pop(k)) for k in COMPONENTS if k in raw}
    noise_name = raw.pop("noise", "default")
    try:
        base = NoiseModel.zero() if noise_name == "zero" else NoiseModel()
        noise = replace(base, **rates)
        kw = {}
        for key in ("rounds", "shots", "seed", "angles"):
            if key in raw:
                kw[key] = int(raw.pop(key))
        for key in ("backend", "post", "lowering", "basis", "gate"):
            if key in raw:
                kw[key] = raw.pop(key).strip()
        if "states" in raw:
            kw["states"] = tuple(s.strip() for s in raw.pop("states").split(";") if s.strip())
        if "gates" in raw:
            kw["gates"] = tuple(s.strip() for s in raw.pop("gates").split(";") if s.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")
    kind = kind.strip()
    kw = {**KIND_DEFAULTS.get(kind, {}), **kw}
    return ExperimentConfig(kind, noise=noise, **kw)


# ---------------------------------------------------------------------------
# Experiments


def _label_basis(label) -> str:
    return "".join(STATES[p][0] for p in parse_label(label))


def _fidelity_counts(code, label, n_rounds, cfg, gates=(), seed_offset=0):
    """Raw and detected 9-basis histograms."""
    raw, det = {}, {}
    retained = []
    for k, basis in enumerate(tomo.BASES):
        exp = build_experiment(code, label, basis, n_rounds, gates, cfg.lowering)
        r = run_experiment(exp, cfg.shots, cfg.noise, cfg.seed + 1000 * seed_offset + k, cfg.backend)
        raw[basis] = tomo.counts_from_values(r.values["s"], r.values["d"])
        det[basis] = tomo.counts_from_values(r.values["s"][r.retained], r.values["d"][r.retained])
        retained.append(r.retention)
    return raw, det, float(np.mean(retained))


def _state_of(label):
    s, d = parse_label(label)
    return tomo.pure_state(tomo.label_ket(s, d))


def _safe_lqst(counts):
    if any(sum(c) == 0 for c in counts.values()):
        return None
    return tomo.lqst(counts)


def _encode_fidelity(cfg, code):
    rows = []
    for i, label in enumerate(cfg.states or all_labels()):
        raw, det, ret = _fidelity_counts(code, label, cfg.rounds, cfg, seed_offset=i)
        target = _state_of(label)
        rho_d = _safe_lqst(det)
        rows.append({"state": label, "fidelity_raw": tomo.state_fidelity(tomo.lqst(raw), target),
                     "fidelity_detect": None if rho_d is None else tomo.state_fidelity(rho_d, target),
                     "retention": ret})
    return {"states": rows}


def _memory(cfg, code):
    label = (cfg.states or ("-,1",))[0]
    basis = cfg.basis or _label_basis(label)
    s_ideal, d_ideal = ideal_value(label, basis)
    sign = s_ideal * d_ideal if s_ideal and d_ideal else (s_ideal or d_ideal)
    key = "sd" if s_ideal and d_ideal else ("s" if s_ideal else "d")
    rows = []
    for r in range(cfg.rounds + 1):
        exp = build_experiment(code, label, basis, r, (), cfg.lowering)
        res = run_experiment(exp, cfg.shots, cfg.noise, cfg.seed + r, cfg.backend)
        rows.append({"round": r, "raw": sign * res.mean(key), "detect": sign * res.mean(key, "detect"),
                     "retention": res.retention})
    doc = {"state": label, "basis": basis, "observable": key, "rounds": rows}
    doc["fits"] = _decay_fits(rows, ("raw", "detect"))
    return doc


def _decay_fits(rows, keys, start=1):
    fits = {}
    for key in keys:
        pts = [(row["round"], row[key]) for row in rows
               if row["round"] >= start and row[key] is not None and not math.isnan(row[key])]
        if len(pts) >= 3:
            fits[key] = fit_exp_decay(*zip(*pts)).as_dict()
        every4 = [p for p in pts if p[0] % 4 == 0]
        if len(every4) >= 3:
            fits[key + "_every4"] = fit_exp_decay(*zip(*every4)).as_dict()
    return fits


def _pauli_gates(cfg, code):
    gates = cfg.gates or ("Xs", "Ys", "Zs", "Xd", "Yd", "Zd")
    states = cfg.states or ("0,0", "+,+", "0,+", "+,0")
    out = []
    ops = {"X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
           "Z": np.diag([1, -1]), "I": np.eye(2)}
    for gi, g in enumerate(gates):
        u = np.kron(ops[g[0]], np.eye(2)) if g.endswith("s") else np.kron(np.eye(2), ops[g[0]])
        fid = {"raw": [], "detect": []}
        for si, label in enumerate(states):
            basis = _label_basis(label)
            psi = u @ tomo.label_ket(*parse_label(label))
            want = np.vdot(psi, np.kron(ops[basis[0]], ops[basis[1]]) @ psi).real
            exp = build_experiment(code, label, basis, cfg.rounds, [(g, 2)], cfg.lowering)
            res = run_experiment(exp, cfg.shots, cfg.noise, cfg.seed + 100 * gi + si, cfg.backend)
            for post in fid:
                fid[post].append((1 + want * res.mean("sd", post)) / 2)
        out.append({"gate": g, **{k: float(np.mean(v)) for k, v in fid.items()}})
    return {"states": list(states), "gates": out}


def _rotation_sweep(cfg, code):
    gate = cfg.gate
    if gate not in ("RZd", "RXd"):
        raise ConfigError("rotation-sweep gate must be RZd or RXd")
    label = (cfg.states or (("0,+",) if gate == "RZd" else ("0,0",)))[0]
    after = 2 if gate == "RZd" else 3
    angles = np.linspace(0, 2 * np.pi, cfg.angles)
    noiseless = all(v == 0 for v in cfg.noise.as_dict().values())
    curves = {k: [] for k in "XYZ"}
    for ang in angles:
        for letter in "XYZ":
            exp = build_experiment(code, label, "Z" + letter, after, [(gate, after, float(ang))], "direct")
            if noiseless:
                curves[letter].append(exact_expectations(exp.circuit, {"d": exp.logical.value_d})["d"])
            else:
                res = run_experiment(exp, cfg.shots, cfg.noise, cfg.seed, "vector")
                curves[letter].append(res.mean("d", cfg.post))
    fits = {k: fit_trig(angles, v).as_dict() for k, v in curves.items() if np.ptp(v) > 1e-9}
    return {"state": label, "gate": gate, "angles": angles.tolist(),
            "expectations": {k: list(map(float, v)) for k, v in curves.items()}, "fits": fits}


BELL = tomo.pure_state(np.array([1, 0, 0, 1]) / np.sqrt(2))


def bell_fidelities(code, cfg, label="+,0"):
    raw, det, ret = _fidelity_counts(code, label, 4, cfg, [("CNOT", 2)])
    s, d = parse_label(label)
    target = tomo.pure_state(tomo.CNOT_UNITARY @ tomo.label_ket(s, d))
    rho_raw, rho_det = tomo.lqst(raw), tomo.lqst(det)
    return {"state": label, "fidelity_raw": tomo.state_fidelity(rho_raw, target),
            "fidelity_detect": tomo.state_fidelity(rho_det, target), "retention": ret,
            "rho_detect_real": rho_det.real.tolist(), "rho_detect_imag": rho_det.imag.tolist()}


def _cnot_bell(cfg, code):
    return {"bell": [bell_fidelities(code, cfg, lab) for lab in (cfg.states or ("+,0",))]}


def _lqpt_cnot(cfg, code):
    key = "detect" if cfg.post == "detect" else "raw"
    ins, outs = [], []
    for i, (s, d) in enumerate(tomo.LQPT_INPUTS):
        label = f"{s},{d}"
        raw_in, det_in, _ = _fidelity_counts(code, label, 4, cfg, (), seed_offset=2 * i)
        raw_out, det_out, _ = _fidelity_counts(code, label, 4, cfg, [("CNOT", 2)], seed_offset=2 * i + 1)
        pick_in = det_in if key == "detect" else raw_in
        pick_out = det_out if key == "detect" else raw_out
        ins.append(tomo.pauli_vector(tomo.lqst(pick_in)))
        outs.append(tomo.pauli_vector(tomo.lqst(pick_out)))
    R = tomo.lqpt(ins, outs)
    fp, fg = tomo.process_and_gate_fidelity(R, tomo.transfer_matrix(tomo.CNOT_UNITARY))
    return {"post": key, "F_p": fp, "F_g": fg, "R": R.tolist()}


def _bs_memory(cfg, code):
    out = []
    for i, label in enumerate(cfg.states or ("0", "+")):
        basis = STATES[label][0]
        sign = STATES[label][1]
        rows = []
        for r in range(1, cfg.rounds + 1):
            run = run_bs(bs_mode_circuits(label, r, code, lowering=cfg.lowering), cfg.shots,
                         cfg.noise, cfg.seed + 100 * i + r, cfg.backend)
            rows.append({"round": r, "raw": sign * run.mean("raw"), "correct": sign * run.mean("correct"),
                         "detect": sign * run.mean("detect"), "retention": float(run.retained.mean()),
                         "detection_rate": run.detection_rate.tolist()})
        out.append({"state": label, "basis": basis, "rounds": rows,
                    "fits": _decay_fits(rows, ("raw", "correct"))})
    return {"states": out}


def _bs_gates(cfg, code):
    gates = cfg.gates or BS_GATES
    states = cfg.states or ("0", "1", "+", "-")
    ideal = {"I": lambda b, s: (b, s), "X": lambda b, s: (b, -s if b in "ZY" else s),
             "Z": lambda b, s: (b, -s if b in "XY" else s), "Y": lambda b, s: (b, -s if b in "XZ" else s),
             "Y90": lambda b, s: ({"Z": "X", "X": "Z", "Y": "Y"}[b], -s if b == "X" else s)}
    out = []
    for gi, g in enumerate(gates):
        if g not in BS_GATES:
            raise ConfigError(f"unknown BS gate {g!r}")
        acc = {k: [] for k in POSTS}
        for si, label in enumerate(states):
            b0, s0 = STATES[label]
            b1, s1 = ideal[g](b0, s0)
            n = max(cfg.rounds, 1)
            gl = [] if g == "I" else [(g, 1)]
            run = run_bs(bs_mode_circuits(label, n if g != "I" else 1, code, gl, b1, cfg.lowering),
                         cfg.shots, cfg.noise, cfg.seed + 100 * gi + si, cfg.backend)
            for post in POSTS:
                acc[post].append(1 - (1 + s1 * run.mean(post)) / 2)
        out.append({"gate": g, **{f"infidelity_{k}": float(np.mean(v)) for k, v in acc.items()}})
    return {"states": list(states), "gates": out}


def bell_budget(code, cfg):
    exps = {b: build_experiment(code, "+,0", b, 4, [("CNOT", 2)], cfg.lowering) for b in tomo.BASES}

    def infidelity(model, envelope):
        counts = {}
        for k, b in enumerate(tomo.BASES):
            r = run_experiment(exps[b], cfg.shots, model, cfg.seed + k, "tableau", envelope)
            keep = r.retained if cfg.post == "detect" else np.ones(r.shots, dtype=bool)
            counts[b] = tomo.counts_from_values(r.values["s"][keep], r.values["d"][keep])
        return 1 - tomo.state_fidelity(tomo.lqst(counts), BELL)

    return error_budget(infidelity, cfg.noise)


def _error_budget(cfg, code):
    eb = bell_budget(code, cfg)
    return {"total_infidelity": eb.total, "fidelity": 1 - eb.total, "others": eb.others,
            "components": [{"component": c, "weight": w, "contribution": v, "percent": p}
                           for c, w, v, p in eb.rows()]}


RUNNERS = {
    "encode-fidelity": _encode_fidelity, "fbs-memory": _memory, "pauli-gates": _pauli_gates,
    "rotation-sweep": _rotation_sweep, "cnot-bell": _cnot_bell, "lqpt-cnot": _lqpt_cnot,
    "bs-memory": _bs_memory, "bs-gates": _bs_gates, "error-budget": _error_budget,
}


def run(cfg: ExperimentConfig) -> dict:
    """Run one configured experiment; deterministic for a fixed seed."""
    code = build_code()
    doc = {"experiment": cfg.kind, "config": _config_doc(cfg)}
    doc["result"] = RUNNERS[cfg.kind](cfg, code)
    return json.loads(json.dumps(doc, default=_jsonable))


def _config_doc(cfg):
    d = asdict(cfg)
    d["noise"] = cfg.noise.as_dict()
    return d


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def to_csv(doc: dict) -> str:
    """Flatten per-round or per-angle tables of a result document to CSV."""
    res = doc["result"]
    buf = io.StringIO()
    w = csv.writer(buf)
    if "rounds" in res:
        w.writerow(["round", "raw", "detect", "retention"])
        for r in res["rounds"]:
            w.writerow([r["round"], r["raw"], r["detect"], r["retention"]])
    elif "angles" in res:
        w.writerow(["angle", "X", "Y", "Z"])
        e = res["expectations"]
        for i, a in enumerate(res["angles"]):
            w.writerow([a, e["X"][i], e["Y"][i], e["Z"][i]])
    elif "states" in res and res["states"] and isinstance(res["states"][0], dict) and "rounds" in res["states"][0]:
        w.writerow(["state", "round", "raw", "correct", "detect", "retention"])
        for s in res["states"]:
            for r in s["rounds"]:
                w.writerow([s["state"], r["round"], r["raw"], r["correct"], r["detect"], r["retention"]])
    else:
        w.writerow(["key", "value"])
        for k, v in res.items():
            w.writerow([k, json.dumps(v)])
    return buf.getvalue()
