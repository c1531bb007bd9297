"""Pass pipeline, flat key-value configuration, reports and parameter sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
import numpy as np

from . import gr as grmod
from .dd import DdSequence, TimingModel, dd_benefit_sim, insert_dd, materialize, schedule
from .ecr import compile_ecr
from .ir import Circuit, CircuitError, gate_counts, op, state_of
from .metrics import hellinger_fidelity, relative_strength
from .noise import NoiseModel, sample_counts, simulate, state_fidelity
from .qasm import QasmError, emit, load
from .route import (
    CouplingGraph,
    RoutedCircuit,
    bv_circuit,
    greedy_baseline_route,
    identity_routing,
    merge_cx_swap,
    mirror_swaps,
    on_coupling,
    route,
    verify_routed,
)

VERIFY_MAX_QUBITS = 6
TARGETS = ("ecr", "gr", "none")
SWEEP_VARS = ("n_qubits", "dd_reps", "idle_dt", "gamma")


class ConfigError(ValueError):
    pass


class PassError(RuntimeError):
    pass


class VerificationError(RuntimeError):
    pass


def read_kv(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    for num, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{num}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def parse_noise(kv: dict[str, str]) -> NoiseModel:
    fields = {"spam": "spam", "gr": "gr_per_qubit", "gr_per_qubit": "gr_per_qubit", "rz": "rz",
              "cz": "cz", "one_qubit": "one_qubit", "two_qubit": "two_qubit", "idle_rate": "idle_rate"}
    kw: dict = {}
    overrides: dict[str, float] = {}
    try:
        for k, v in kv.items():
            if k in fields:
                kw[fields[k]] = float(v)
            elif k in ("idle_axis", "convention"):
                kw[k] = v
            else:
                overrides[k] = float(v)
        return NoiseModel(**kw, overrides=overrides)
    except ValueError as exc:
        raise ConfigError(f"noise model: {exc}") from None


def parse_timing(kv: dict[str, str]) -> TimingModel:
    base = TimingModel()
    try:
        g = int(kv.pop("granularity", base.granularity))
        m = int(kv.pop("alignment", base.alignment))
        durs = {k: int(v) for k, v in kv.items()}
        return TimingModel({**base.durations, **durs}, g, m)
    except ValueError as exc:
        raise ConfigError(f"timing model: {exc}") from None


@dataclass
class PipelineConfig:
    input: str | None = None
    target: str = "none"
    passes: tuple[str, ...] = ()
    coupling: str | None = None
    timing: TimingModel = field(default_factory=TimingModel)
    noise: NoiseModel | None = None
    seed: int = 0
    shots: int = 4000
    gr_baseline: bool = False
    drop_final_rz: bool = False
    report: str | None = None
    emit: str | None = None
    sweep: str | None = None
    csv: str | None = None
    family: str = "bv"

    def validate(self) -> None:
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r}; expected one of {', '.join(TARGETS)}")
        for p in self.passes:
            parse_pass(p)
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")

    @classmethod
    def from_kv(cls, kv: dict[str, str], base: "PipelineConfig | None" = None) -> "PipelineConfig":
        cfg = base or cls()
        known = {"input", "target", "passes", "coupling", "seed", "shots", "gr_baseline", "drop_final_rz", "report",
                 "emit", "sweep", "csv", "family", "noise", "timing"}
        noise_kv = {k[6:]: v for k, v in kv.items() if k.startswith("noise.")}
        timing_kv = {k[7:]: v for k, v in kv.items() if k.startswith("timing.")}
        for k in kv:
            if k not in known and not k.startswith(("noise.", "timing.")):
                raise ConfigError(f"unknown config key {k!r}")
        try:
            upd: dict = {}
            for k in ("input", "target", "coupling", "report", "emit", "sweep", "csv", "family"):
                if k in kv:
                    upd[k] = kv[k]
            if "passes" in kv:
                upd["passes"] = split_passes(kv["passes"])
            if "seed" in kv:
                upd["seed"] = int(kv["seed"])
            if "shots" in kv:
                upd["shots"] = int(kv["shots"])
            for k in ("gr_baseline", "drop_final_rz"):
                if k in kv:
                    upd[k] = _flag(k, kv[k])
        except ValueError as exc:
            raise ConfigError(f"config: {exc}") from None
        if "noise" in kv:
            noise_kv = {**read_kv(kv["noise"]), **noise_kv}
        if "timing" in kv:
            timing_kv = {**read_kv(kv["timing"]), **timing_kv}
        if noise_kv:
            upd["noise"] = parse_noise(noise_kv)
        if timing_kv:
            upd["timing"] = parse_timing(timing_kv)
        return replace(cfg, **upd)


def _flag(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{key} expects a boolean, got {value!r}")


def split_passes(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def parse_pass(name: str) -> tuple[str, tuple]:
    if name in ("route-star-line", "route-greedy", "mirror-swaps", "merge-cx-swap", "compile"):
        return name, ()
    head, _, rest = name.partition(":")
    if head == "schedule" and rest in ("asap", "alap"):
        return head, (rest,)
    if head == "dd":
        seq, _, reps = rest.partition(":")
        try:
            return head, (DdSequence(seq, int(reps) if reps else 1),)
        except ValueError:
            pass
    raise ConfigError(f"invalid pass {name!r}")


# ---------------------------------------------------------------------------
# running


@dataclass
class State:
    original: Circuit
    routed: RoutedCircuit
    coupling: CouplingGraph | None = None
    sched = None
    swaps: int = 0

    @property
    def circuit(self) -> Circuit:
        return self.routed.circuit

    def set_circuit(self, c: Circuit) -> None:
        self.routed = RoutedCircuit(c, self.routed.initial_layout, self.routed.final_permutation)


def _coupling(cfg: PipelineConfig, n: int) -> CouplingGraph:
    spec = cfg.coupling or f"line:{n}"
    try:
        g = CouplingGraph.parse(spec)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"coupling {spec!r}: {exc}") from None
    if g.num_qubits < n:
        raise ConfigError(f"coupling {spec!r} has {g.num_qubits} qubits, circuit needs {n}")
    return g


def _compile(cfg: PipelineConfig, c: Circuit) -> Circuit:
    if cfg.target == "ecr":
        out = compile_ecr(c)
        if cfg.drop_final_rz:
            out = out.with_ops(grmod.drop_terminal_rz(out.ops, out.num_qubits))
        return out
    if cfg.target == "gr":
        fn = grmod.compile_gr_baseline if cfg.gr_baseline else grmod.compile_gr
        return fn(c, drop_final_rz=cfg.drop_final_rz)
    return c


def _y_to_native(c: Circuit, target: str) -> Circuit:
    """On the ECR target a Y pulse is a virtual Rz(pi) followed by X."""
    if target != "ecr":
        return c
    out = []
    for o in c.ops:
        if o.kind == "y":
            out += [op("rz", o.qubits[0], params=[math.pi]), op("x", o.qubits[0])]
        else:
            out.append(o)
    return c.with_ops(out)


def run_passes(cfg: PipelineConfig, circuit: Circuit) -> State:
    st = State(circuit, identity_routing(circuit))
    for name in cfg.passes:
        kind, args = parse_pass(name)
        try:
            if kind in ("route-star-line", "route-greedy"):
                g = _coupling(cfg, st.circuit.num_qubits)
                if st.routed.initial_layout != tuple(range(st.circuit.num_qubits)) or st.coupling:
                    raise PassError("circuit is already routed")
                fn = route if kind == "route-star-line" else greedy_baseline_route
                st.routed = fn(st.circuit, g)
                st.coupling = g
                st.swaps = st.routed.swap_count
            elif kind == "mirror-swaps":
                m = mirror_swaps(st.circuit, st.coupling)
                st.routed = st.routed.then(m.final_permutation, m.circuit)
            elif kind == "merge-cx-swap":
                st.set_circuit(merge_cx_swap(st.circuit))
            elif kind == "compile":
                st.set_circuit(_compile(cfg, st.circuit))
            elif kind == "schedule":
                st.sched = schedule(st.circuit, cfg.timing, args[0])
            elif kind == "dd":
                sch = st.sched or schedule(st.circuit, cfg.timing, "asap")
                st.set_circuit(_y_to_native(insert_dd(sch, args[0]), cfg.target))
                st.sched = schedule(st.circuit, cfg.timing, "asap")
        except ConfigError:
            raise
        except (CircuitError, ValueError) as exc:
            raise PassError(f"{name}: {exc}") from None
    return st


def _logical_probs(probs: np.ndarray, final: tuple[int, ...], n_logical: int) -> np.ndarray:
    """Reorder physical outcome probabilities into logical bit order."""
    out = np.zeros(2**n_logical)
    for idx, p in enumerate(probs):
        if p == 0.0:
            continue
        lidx = 0
        for i in range(n_logical):
            lidx |= ((idx >> final[i]) & 1) << i
        out[lidx] += p
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6f}"
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    return str(v)


REPORT_KEYS = (
    "num_qubits", "target", "passes", "ops", "gate_counts", "two_qubit", "rz_count",
    "rz_nonterminal", "gr_count", "gr_area_pi", "makespan_dt", "swap_count",
    "initial_layout", "final_permutation", "on_coupling", "verified",
)


def report_of(cfg: PipelineConfig, st: State) -> dict[str, object]:
    c = st.circuit
    counts = gate_counts(c)
    sch = st.sched or schedule(c, cfg.timing, "asap")
    rep: dict[str, object] = {
        "num_qubits": c.num_qubits,
        "target": cfg.target,
        "passes": ",".join(cfg.passes) or "-",
        "ops": len(c.ops),
        "gate_counts": ",".join(f"{k}={v}" for k, v in sorted(counts.by_kind.items())) or "-",
        "two_qubit": counts.two_qubit,
        "rz_count": counts["rz"],
        "rz_nonterminal": sum(1 for o in grmod.drop_terminal_rz(c.ops, c.num_qubits) if o.kind == "rz"),
        "gr_count": counts["gr"],
        "gr_area_pi": counts.gr_area / math.pi,
        "makespan_dt": sch.makespan,
        "swap_count": st.swaps,
        "initial_layout": st.routed.initial_layout,
        "final_permutation": st.routed.final_permutation,
        "on_coupling": on_coupling(c, st.coupling) if st.coupling else True,
    }
    if c.num_qubits <= VERIFY_MAX_QUBITS:
        ok = verify_routed(st.original, st.routed, up_to_final_z=cfg.drop_final_rz)
        rep["verified"] = ok and bool(rep["on_coupling"])
    else:
        rep["verified"] = "skipped"
    if cfg.noise is not None and c.num_qubits <= 8:
        n_log = st.original.num_qubits
        final = st.routed.final_permutation
        # phases right before readout are not played on hardware
        measured = c.with_ops(grmod.drop_terminal_rz(c.ops, c.num_qubits))
        ideal_psi = state_of(measured)
        rho = simulate(measured, cfg.noise, cfg.timing if cfg.noise.idle_rate else None)
        ideal = _logical_probs(np.abs(ideal_psi) ** 2, final, n_log)
        noisy = _logical_probs(rho.probabilities, final, n_log)
        ic = sample_counts(ideal, cfg.shots, cfg.seed)
        nc = sample_counts(noisy, cfg.shots, cfg.seed + 1)
        correct = format(int(np.argmax(ideal)), f"0{n_log}b")
        rep["state_fidelity"] = state_fidelity(rho, ideal_psi)
        rep["hellinger_fidelity"] = hellinger_fidelity(ic, nc)
        rep["relative_strength"] = relative_strength(nc, correct)
        rep["shots"] = cfg.shots
        rep["seed"] = cfg.seed
    return rep


def format_report(rep: dict[str, object]) -> str:
    keys = [k for k in REPORT_KEYS if k in rep] + [k for k in rep if k not in REPORT_KEYS]
    return "".join(f"{k}: {_fmt(rep[k])}\n" for k in keys)


def load_input(cfg: PipelineConfig) -> Circuit:
    if not cfg.input:
        raise ConfigError("no input circuit given")
    try:
        return load(cfg.input)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.input}: {exc.strerror}") from None


def run(cfg: PipelineConfig, circuit: Circuit | None = None) -> tuple[State, dict[str, object]]:
    cfg.validate()
    circuit = circuit if circuit is not None else load_input(cfg)
    st = run_passes(cfg, circuit)
    rep = report_of(cfg, st)
    return st, rep


def write_outputs(cfg: PipelineConfig, st: State, rep: dict[str, object]) -> str:
    text = format_report(rep)
    if cfg.report:
        Path(cfg.report).write_text(text, encoding="utf-8")
    if cfg.emit:
        Path(cfg.emit).write_text(emit(st.circuit), encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# sweeps


def parse_sweep(text: str) -> tuple[str, list[float]]:
    var, sep, rng = text.partition("=")
    var = var.strip()
    if not sep:
        raise ConfigError(f"sweep {text!r}: expected var=start:stop[:step]")
    if var not in SWEEP_VARS:
        raise ConfigError(f"unsupported sweep variable {var!r}; expected one of {', '.join(SWEEP_VARS)}")
    parts = rng.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"sweep {text!r}: expected var=start:stop[:step]")
    try:
        start, stop = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else 1.0
    except ValueError:
        raise ConfigError(f"sweep {text!r}: bounds must be numbers") from None
    if step <= 0:
        raise ConfigError("sweep step must be positive")
    values = []
    k = 0
    while start + k * step <= stop + 1e-9 * step:
        values.append(start + k * step)
        k += 1
    if var in ("n_qubits", "dd_reps", "idle_dt"):
        if any(v != int(v) for v in values):
            raise ConfigError(f"sweep variable {var} takes integer values")
        values = [int(v) for v in values]
    return var, values


def ramsey(idle_dt: int) -> Circuit:
    return Circuit(1, [op("sx", 0), op("delay", 0, params=[idle_dt]), op("sx", 0)])


def qaoa_p1(n: int, gamma: float, beta: float = math.pi / 8) -> Circuit:
    ops = [op("h", q) for q in range(n)]
    ops += [op("rzz", q, q + 1, params=[gamma]) for q in range(n - 1)]
    ops += [op("rx", q, params=[2 * beta]) for q in range(n)]
    return Circuit(n, ops)


def family_circuit(family: str, n: int) -> Circuit:
    if family == "bv":
        return bv_circuit(n)
    if family == "ghz":
        return Circuit(n, [op("h", 0)] + [op("cx", q, q + 1) for q in range(n - 1)])
    raise ConfigError(f"unknown circuit family {family!r}")


SWEEP_METRICS = ("two_qubit", "rz_count", "gr_count", "gr_area_pi", "makespan_dt", "swap_count", "verified")


def sweep(cfg: PipelineConfig, text: str) -> str:
    var, values = parse_sweep(text)
    cfg.validate()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if var == "idle_dt":
        noise = cfg.noise or NoiseModel.noiseless()
        seqs = [parse_pass(p)[1][0] for p in cfg.passes if p.startswith("dd")] or [DdSequence("xy4", 1)]
        w.writerow([var, "idle_error_bare", "idle_error_dd", "dd_sequence"])
        for v in values:
            c = ramsey(v)
            sch = schedule(c, cfg.timing)
            with_dd = insert_dd(sch, seqs[0])
            e_dd, e_bare = dd_benefit_sim(with_dd, materialize(sch), noise.idle_rate, noise.idle_axis, cfg.timing)
            w.writerow([v, f"{e_bare:.6e}", f"{e_dd:.6e}", f"{seqs[0].kind}:{seqs[0].repetitions}"])
        return buf.getvalue()
    extra = ["baseline_swaps"] if var == "n_qubits" else []
    noisy = ["state_fidelity", "hellinger_fidelity"] if cfg.noise is not None else []
    w.writerow([var, *SWEEP_METRICS, *extra, *noisy])
    base_circuit = None if var == "n_qubits" or (var == "gamma" and not cfg.input) else load_input(cfg)
    for v in values:
        run_cfg = cfg
        if var == "n_qubits":
            circuit = family_circuit(cfg.family, v)
            run_cfg = replace(cfg, coupling=f"line:{v}")
        elif var == "gamma":
            circuit = qaoa_p1(3, v) if base_circuit is None else base_circuit
        else:
            circuit = base_circuit
            run_cfg = replace(cfg, passes=tuple(_with_reps(p, v) for p in cfg.passes))
        st, rep = run(run_cfg, circuit)
        row = [_fmt(v), *(_fmt(rep[k]) for k in SWEEP_METRICS)]
        if extra:
            row.append(greedy_baseline_route(circuit, CouplingGraph.line(v)).swap_count)
        row += [_fmt(rep[k]) for k in noisy]
        w.writerow(row)
    return buf.getvalue()


def _with_reps(p: str, reps: int) -> str:
    if p.startswith("dd"):
        kind, args = parse_pass(p)
        return f"dd:{args[0].kind}:{reps}"
    return p


ERROR_CLASSES: dict[type, tuple[str, int]] = {
    QasmError: ("parse error", 2),
    ConfigError: ("config error", 3),
    PassError: ("pass error", 4),
    VerificationError: ("verification failed", 5),
}
