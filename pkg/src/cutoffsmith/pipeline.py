"""End-to-end driver: parse, analyse, synthesize, discharge conditions, model check."""

from __future__ import annotations

import glob
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence

from . import conformance, smt
from .frontend import ParseError, load_protocol, preprocess
from .semantics import DEFAULT_STATE_CAP, StateCapExceeded
from .synthesis import SynthesisError, SynthesisResult, load_override, synthesize

PROVED, FAILED, UNKNOWN = "proved", "condition-failed", "unknown"
EXIT_CODES = {PROVED: 0, FAILED: 2, UNKNOWN: 3}
EXIT_USAGE = 4

# row order of the benchmark table; other protocols follow alphabetically
TABLE_ORDER = ("sharded_kv", "leader_election_ring", "centralized_lock_server", "ricart_agrawala",
               "basic_kv", "two_phase_commit", "distributed_lock_server")

# model-check bounds the benchmark uses instead of the defaults; sharded KV
# with two keys has more reachable cutoff states than the default state cap
CORPUS_BOUNDS = {"sharded_kv": {"key": 1}}

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "corpus")


class StageError(Exception):
    """A failure in one pipeline stage, rendered as `file:line:col: stage: message`."""

    def __init__(self, stage: str, message: str, path: str = "", line: int = 1, col: int = 1):
        super().__init__(message)
        self.stage = stage
        self.message = message
        self.path = path
        self.line = line
        self.col = col

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.stage}: {self.message}"


@dataclass
class Config:
    solver: Optional[str] = None
    timeout: float = smt.DEFAULT_TIMEOUT
    keep_going: bool = False
    bounds: Dict[str, int] = field(default_factory=dict)
    skip_model_check: bool = False
    state_cap: int = DEFAULT_STATE_CAP
    emit_smt: Optional[str] = None
    jobs: int = 4


@dataclass
class ModelCheckSummary:
    safe: Optional[bool]          # None when skipped or out of budget
    states: int = 0
    seconds: float = 0.0
    bounds: Dict[str, int] = field(default_factory=dict)
    note: str = ""
    trace: str = ""


@dataclass
class RunReport:
    protocol: str
    path: str
    override: Optional[str]
    cutoff: int
    gamma: int
    tau: int
    actions: int
    iterations: int
    automated: bool
    verdicts: List[smt.Verdict]
    model_check: ModelCheckSummary
    status: str
    witness: str = ""
    timings: Dict[str, float] = field(default_factory=dict)
    synthesis: Optional[SynthesisResult] = field(default=None, repr=False, compare=False)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @property
    def seconds(self) -> float:
        return sum(self.timings.values())

    def to_json(self, times: bool = True) -> dict:
        out = {
            "protocol": self.protocol,
            "override": os.path.basename(self.override) if self.override else None,
            "cutoff": self.cutoff,
            "gamma": self.gamma,
            "tau": self.tau,
            "actions": self.actions,
            "iterations": self.iterations,
            "automated": self.automated,
            "conditions": [{"name": v.name, "answer": v.answer} for v in self.verdicts],
            "model_check": {"safe": self.model_check.safe, "states": self.model_check.states,
                            "bounds": self.model_check.bounds, "note": self.model_check.note},
            "status": self.status,
        }
        if times:
            out["timings"] = {k: round(v, 4) for k, v in self.timings.items()}
            for c, v in zip(out["conditions"], self.verdicts):
                c["seconds"] = round(v.seconds, 4)
        return out

    def text(self) -> str:
        lines = [f"protocol {self.protocol}: {self.status}",
                 f"  cutoff {self.cutoff}, |gamma| {self.gamma}, |tau| {self.tau}/{self.actions}, "
                 f"analysis rounds {self.iterations}, synthesis {'automated' if self.automated else 'override'}"]
        for v in self.verdicts:
            lines.append(f"  {v.name:<28} {v.answer:<8} {v.seconds:.3f}s")
        mc = self.model_check
        if mc.safe is None:
            lines.append(f"  model check: {mc.note or 'skipped'}")
        else:
            b = ", ".join(f"{k}={v}" for k, v in sorted(mc.bounds.items()))
            lines.append(f"  model check: {'safe' if mc.safe else 'UNSAFE'}, {mc.states} states at {{{b}}}, "
                         f"{mc.seconds:.2f}s")
        if self.witness:
            lines.append("  witness:")
            lines += [f"    {x}" for x in self.witness.splitlines()]
        return "\n".join(lines)


def _stage_parse(path: str, override: Optional[str]):
    try:
        ast = load_protocol(path)
        meta = preprocess(ast)
        spec = load_override(override) if override else None
    except ParseError as e:
        raise StageError("parse", e.message, e.path or path, e.line, e.col) from e
    except OSError as e:
        raise StageError("parse", f"cannot read: {e.strerror}", e.filename or path) from e
    return meta, spec


def synthesize_path(path: str, override: Optional[str] = None) -> SynthesisResult:
    meta, spec = _stage_parse(path, override)
    try:
        return synthesize(meta, spec)
    except ParseError as e:
        raise StageError("override", e.message, e.path or override or path, e.line, e.col) from e
    except (SynthesisError, OSError) as e:
        raise StageError("synthesis", str(e), path) from e


def verify(path: str, override: Optional[str] = None, config: Optional[Config] = None) -> RunReport:
    config = config or Config()
    timings: Dict[str, float] = {}
    t = time.perf_counter()
    synth = synthesize_path(path, override)
    timings["synthesis"] = time.perf_counter() - t

    t = time.perf_counter()
    try:
        scripts = smt.encode_all(synth)
    except smt.EncodingError as e:
        raise StageError("encode", str(e), path) from e
    if config.emit_smt:
        smt.write_scripts(scripts, config.emit_smt)
    solver = smt.find_solver(config.solver)
    if config.solver and solver is None:
        raise StageError("smt", f"solver '{config.solver}' not found", path)
    verdicts: List[smt.Verdict] = []
    if config.keep_going:
        verdicts = smt.check_all(scripts, solver, config.timeout, config.jobs)
    else:
        for s in scripts:
            v = smt.run_solver(s, solver, config.timeout)
            verdicts.append(v)
            if not v.holds:
                break
    timings["smt"] = time.perf_counter() - t

    status, witness = PROVED, ""
    bad = [v for v in verdicts if not v.holds]
    if any(v.answer == "sat" for v in bad):
        v = next(v for v in bad if v.answer == "sat")
        status, witness = FAILED, f"{v.name} is sat\n{v.detail}".rstrip()
    elif bad:
        status, witness = UNKNOWN, f"{bad[0].name}: {bad[0].detail}"

    mc = ModelCheckSummary(None, note="skipped")
    if not config.skip_model_check and (status == PROVED or config.keep_going):
        t = time.perf_counter()
        mc = model_check(synth, config.bounds, config.state_cap)
        timings["model_check"] = time.perf_counter() - t
        if mc.safe is False and status != FAILED:
            status, witness = FAILED, "cutoff instance is unsafe\n" + mc.trace
        elif mc.safe is None and status == PROVED:
            status, witness = UNKNOWN, mc.note

    return RunReport(synth.ast.name, path, override, synth.size, len(synth.gamma), len(synth.simulated_actions),
                     len(synth.ast.actions), synth.analysis.iterations, not synth.overridden, verdicts, mc,
                     status, witness, timings, synth)


def model_check(synth: SynthesisResult, bounds: Optional[Mapping[str, int]] = None,
                cap: int = DEFAULT_STATE_CAP) -> ModelCheckSummary:
    inst = conformance.cutoff_instance(synth, bounds)
    t = time.perf_counter()
    try:
        r = inst.model_check(cap)
    except StateCapExceeded as e:
        return ModelCheckSummary(None, 0, time.perf_counter() - t, dict(inst.sizes), f"state cap exceeded: {e}")
    trace = inst.dump_trace(r.trace) if r.trace is not None else ""
    return ModelCheckSummary(r.safe, r.states, time.perf_counter() - t, dict(inst.sizes), "", trace)


def fuzz_conformance(path: str, override: Optional[str] = None, nodes: int = 4, trials: int = 1000,
                     seed: int = 7, length: int = 30, bounds: Optional[Mapping[str, int]] = None
                     ) -> conformance.FuzzReport:
    synth = synthesize_path(path, override)
    return conformance.fuzz(synth, nodes=nodes, trials=trials, length=length, seed=seed, bounds=bounds)


# ---------------------------------------------------------------- corpus benchmark

def corpus_entries(directory: str) -> List[tuple]:
    """(protocol path, override path or None) pairs, in table order."""
    paths = glob.glob(os.path.join(directory, "*.rml"))
    rank = {n: i for i, n in enumerate(TABLE_ORDER)}

    def key(p: str):
        stem = os.path.splitext(os.path.basename(p))[0]
        return (rank.get(stem, len(rank)), stem)

    out = []
    for p in sorted(paths, key=key):
        ov = os.path.splitext(p)[0] + ".override"
        out.append((p, ov if os.path.exists(ov) else None))
    return out


@dataclass
class BenchRow:
    path: str
    report: Optional[RunReport] = None
    error: str = ""


def bench(directory: str, config: Optional[Config] = None) -> List[BenchRow]:
    config = config or Config()

    def run(entry) -> BenchRow:
        path, ov = entry
        stem = os.path.splitext(os.path.basename(path))[0]
        cfg = replace(config, bounds={**CORPUS_BOUNDS.get(stem, {}), **config.bounds})
        try:
            return BenchRow(path, verify(path, ov, cfg))
        except StageError as e:
            return BenchRow(path, None, str(e))

    entries = corpus_entries(directory)
    with ThreadPoolExecutor(max_workers=max(1, config.jobs)) as pool:
        return list(pool.map(run, entries))


def bench_json(rows: Sequence[BenchRow], times: bool = True) -> str:
    out = []
    for r in rows:
        if r.report is not None:
            out.append(r.report.to_json(times))
        else:
            out.append({"protocol": os.path.splitext(os.path.basename(r.path))[0], "error": r.error})
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def bench_table(rows: Sequence[BenchRow]) -> str:
    head = ("Protocol", "Cutoff", "|gamma|", "|tau|", "Rounds", "Conditions", "MC states", "Automated",
            "Time (s)", "Status")
    body = []
    for r in rows:
        rep = r.report
        if rep is None:
            body.append((os.path.basename(r.path), "-", "-", "-", "-", "-", "-", "-", "-", "error"))
            continue
        unsat = sum(v.holds for v in rep.verdicts)
        body.append((rep.protocol, str(rep.cutoff), str(rep.gamma), f"{rep.tau}/{rep.actions}", str(rep.iterations),
                     f"{unsat}/{len(rep.verdicts)} unsat", str(rep.model_check.states) if rep.model_check.safe else "-",
                     "yes" if rep.automated else "no", f"{rep.seconds:.2f}", rep.status))
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    fmt = lambda row: "  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip()
    lines = [fmt(head), fmt(tuple("-" * w for w in widths))] + [fmt(b) for b in body]
    lines += [f"{os.path.basename(r.path)}: {r.error}" for r in rows if r.report is None]
    return "\n".join(lines) + "\n"


def bench_exit_code(rows: Sequence[BenchRow]) -> int:
    if not rows:
        return EXIT_USAGE
    codes = [EXIT_USAGE if r.report is None else r.report.exit_code for r in rows]
    return max(codes)
