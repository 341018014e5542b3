"""One-shot verification driver and report emitters.

``run`` walks four layers of checks -- the compatibility closure of the
linear pair, the transversal symmetry families, the reduction-case
registry with its plain/dressed equivalences, and the exact exponential
profiles -- and collects one pass/fail item per check.  Every check is
guarded: an internal error surfaces as a failed item, never as a crash
of the driver.

The text emitter carries per-item timings.  The JSON emitter omits them
and sorts all keys, so two runs with the same configuration produce
byte-identical documents that can be diffed or archived.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from time import perf_counter
from typing import Callable, Optional

from .equations import Equation, PDESystem
from .expr import epow, is_zero, jet, jet_atoms, mul, sub, sym_ref
from .parser import render
from .lax import (
    build_ch_lax,
    check_recursion_form,
    compatibility,
    hierarchy_from_pair,
)
from .numeric import OracleError, ZeroOracle
from .reduction import (
    CASE_IDS,
    appendix_equivalence,
    reflection_check,
    verify_case,
    verify_section6,
)
from .symmetry import (
    t_mode_family,
    verify_symmetry,
    x_mode_family,
    y_mode_family,
)

SCHEMA_VERSION = 1

#: orders with a reduction-case registry
REDUCTION_NS = (1, 2)

#: orders covered by the exact exponential profiles
PROFILE_NS = (1, 2, 3)


@dataclass(frozen=True)
class RunConfig:
    """What to verify and how hard to cross-check it numerically."""

    ns: tuple = (1, 2, 3)
    cases: tuple = CASE_IDS
    oracle_samples: int = 100
    seed: int = 0
    fail_fast: bool = False

    def oracle(self) -> ZeroOracle:
        return ZeroOracle(seed=self.seed, samples=self.oracle_samples)


@dataclass
class Item:
    """One verified statement: a label, a verdict, and optional stages."""

    label: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    stages: tuple = ()


@dataclass
class Section:
    name: str
    items: tuple

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items)


@dataclass
class Report:
    config: RunConfig
    sections: tuple

    @property
    def passed(self) -> bool:
        return all(sec.passed for sec in self.sections)

    # -- emitters -----------------------------------------------------

    def to_text(self) -> str:
        cfg = self.config
        lines = [
            "verification report",
            f"  orders: {', '.join(str(n) for n in cfg.ns)}",
            f"  cases: {', '.join(cfg.cases)}",
            f"  oracle: {cfg.oracle_samples} samples, seed {cfg.seed}",
            f"  result: {'PASS' if self.passed else 'FAIL'}",
        ]
        for sec in self.sections:
            lines.append("")
            lines.append(f"{sec.name}")
            for it in sec.items:
                mark = " ok " if it.passed else "FAIL"
                detail = f" -- {it.detail}" if it.detail else ""
                lines.append(f"  [{mark}] {it.label} ({it.seconds:.2f}s){detail}")
                if not it.passed:
                    for st in it.stages:
                        smark = "ok" if st.passed else "FAIL"
                        sdetail = f": {st.detail}" if st.detail else ""
                        lines.append(f"      {smark:4} {st.name}{sdetail}")
        return "\n".join(lines) + "\n"

    def to_latex(self) -> str:
        cfg = self.config
        lines = [
            r"\section*{Verification report}",
            r"\begin{itemize}",
            rf"\item orders: {', '.join(str(n) for n in cfg.ns)}",
            rf"\item cases: {_tex(', '.join(cfg.cases))}",
            rf"\item oracle: {cfg.oracle_samples} samples, seed {cfg.seed}",
            rf"\item result: \textbf{{{'PASS' if self.passed else 'FAIL'}}}",
            r"\end{itemize}",
        ]
        for sec in self.sections:
            lines.append(rf"\subsection*{{{_tex(sec.name)}}}")
            lines.append(r"\begin{longtable}{llp{0.5\textwidth}}")
            lines.append(r"check & verdict & note \\ \hline")
            for it in sec.items:
                verdict = r"\textbf{FAIL}" if not it.passed else "pass"
                lines.append(
                    rf"{_tex(it.label)} & {verdict} & {_tex(it.detail)} \\"
                )
            lines.append(r"\end{longtable}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        cfg = self.config
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": {
                "ns": list(cfg.ns),
                "cases": list(cfg.cases),
                "oracle_samples": cfg.oracle_samples,
                "seed": cfg.seed,
                "fail_fast": cfg.fail_fast,
            },
            "passed": self.passed,
            "sections": [
                {
                    "name": sec.name,
                    "passed": sec.passed,
                    "items": [
                        {
                            "label": it.label,
                            "passed": it.passed,
                            "detail": it.detail,
                            "stages": [
                                {
                                    "name": st.name,
                                    "passed": st.passed,
                                    "detail": st.detail,
                                }
                                for st in it.stages
                            ],
                        }
                        for it in sec.items
                    ],
                }
                for sec in self.sections
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


_TEX_MAP = {
    "\\": r"\textbackslash{}",
    "&": r"\&",
    "%": r"\%",
    "$": r"\$",
    "#": r"\#",
    "_": r"\_",
    "{": r"\{",
    "}": r"\}",
    "~": r"\textasciitilde{}",
    "^": r"\textasciicircum{}",
}


def _tex(s: str) -> str:
    return "".join(_TEX_MAP.get(c, c) for c in s)


# ---------------------------------------------------------------------------
# the driver
# ---------------------------------------------------------------------------

class _Runner:
    """Guards each check and honours fail-fast."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.stop = False

    def guard(self, label: str, fn: Callable) -> Item:
        t0 = perf_counter()
        try:
            passed, detail, stages = fn()
        except Exception as err:  # surface, never crash the driver
            passed, detail, stages = False, f"internal error: {err}", ()
        item = Item(label, bool(passed), detail, perf_counter() - t0, tuple(stages))
        if not item.passed and self.config.fail_fast:
            self.stop = True
        return item


def _from_case_report(rep) -> tuple:
    ok = sum(1 for st in rep.stages if st.passed)
    return rep.passed, f"{ok}/{len(rep.stages)} stages", rep.stages


def _check_compatibility(n: int) -> tuple:
    pair = build_ch_lax(n)
    first = compatibility(pair, schedule="spatial_first")
    second = compatibility(pair, schedule="temporal_first")
    if not first.same_ideal_generators(second):
        return False, "elimination schedules disagree", ()
    return True, f"{len(first)} generators, schedule independent", ()


def _check_parameter_flow(n: int) -> tuple:
    pair = build_ch_lax(n)
    system = compatibility(pair)
    lam = pair.param_sym
    got = PDESystem([eq for eq in system if jet_atoms(eq.lhs, lam)])
    want_expr = sub(
        jet(lam, {pair.secondary_var: 1}),
        mul(epow(sym_ref(lam), n), jet(lam, {pair.flow_var: 1})),
    )
    want = PDESystem([Equation.make(want_expr)])
    if not got.same_ideal_generators(want):
        return False, f"parameter equations differ from {render(want_expr)} = 0", ()
    return True, f"{render(want_expr)} = 0", ()


def _check_recursion(n: int) -> tuple:
    h = hierarchy_from_pair(build_ch_lax(n))
    ok = check_recursion_form(h)
    return ok, "operator chain regenerates the hierarchy", ()


def _check_reflection(n: int) -> tuple:
    bad = [label for label, r in reflection_check(n) if not is_zero(r)]
    if bad:
        return False, f"parity broken for {', '.join(bad)}", ()
    return True, "pair even/odd split is exact under full reflection", ()


def _check_family(factory: Callable, oracle: ZeroOracle) -> tuple:
    rep = verify_symmetry(factory())
    if not rep.passed:
        return False, f"{len(rep.residuals)} determining residual(s) survive", ()
    try:
        for cert in rep.certificates:
            oracle.check_cert(cert)
    except OracleError as err:
        return False, f"numeric certificate failed: {err}", ()
    return True, f"{len(rep.certificates)} numeric certificates replayed", ()


def _check_obstruction(n: int) -> tuple:
    rep = verify_symmetry(x_mode_family(n, sign=1, constrained=False))
    if rep.passed:
        return False, "family verified without the stationarity constraints", ()
    count = len(rep.residuals)
    return True, f"{count} residual(s) obstruct the unconstrained family", ()


def run(config: Optional[RunConfig] = None) -> Report:
    """Execute every configured check and collect the report."""
    if config is None:
        config = RunConfig()
    runner = _Runner(config)
    oracle = config.oracle()
    sections = []

    # -- compatibility closure of the pair ----------------------------
    items = []
    for n in config.ns:
        if runner.stop:
            break
        items.append(runner.guard(
            f"compatibility closure (n={n})",
            lambda n=n: _check_compatibility(n),
        ))
        if runner.stop:
            break
        items.append(runner.guard(
            f"parameter flow (n={n})",
            lambda n=n: _check_parameter_flow(n),
        ))
        if runner.stop:
            break
        items.append(runner.guard(
            f"operator recursion (n={n})",
            lambda n=n: _check_recursion(n),
        ))
        if runner.stop:
            break
        items.append(runner.guard(
            f"reflection parity (n={n})",
            lambda n=n: _check_reflection(n),
        ))
    sections.append(Section("compatibility closure", tuple(items)))

    # -- transversal symmetry families ---------------------------------
    items = []
    for n in config.ns:
        if n not in REDUCTION_NS or runner.stop:
            continue
        checks = [
            (f"t-transversal family (n={n})",
             lambda n=n: _check_family(lambda: t_mode_family(n), oracle)),
            (f"y-transversal family (n={n})",
             lambda n=n: _check_family(lambda: y_mode_family(n), oracle)),
            (f"x-transversal family without side constraints (n={n})",
             lambda n=n: _check_obstruction(n)),
            (f"x-transversal family, upper branch (n={n})",
             lambda n=n: _check_family(
                 lambda: x_mode_family(n, sign=1, constrained=True), oracle)),
            (f"x-transversal family, lower branch (n={n})",
             lambda n=n: _check_family(
                 lambda: x_mode_family(n, sign=-1, constrained=True), oracle)),
        ]
        for label, fn in checks:
            if runner.stop:
                break
            items.append(runner.guard(label, fn))
    sections.append(Section("transversal symmetry families", tuple(items)))

    # -- reduction cases ------------------------------------------------
    items = []
    for n in config.ns:
        if n not in REDUCTION_NS or runner.stop:
            continue
        for cid in config.cases:
            if runner.stop:
                break
            items.append(runner.guard(
                f"case {cid} (n={n})",
                lambda cid=cid, n=n: _from_case_report(verify_case(cid, n, oracle)),
            ))
    sections.append(Section("reduction cases", tuple(items)))

    # -- plain/dressed equivalences --------------------------------------
    items = []
    selected = set(config.cases)
    for n in config.ns:
        if n not in REDUCTION_NS or runner.stop:
            continue
        for k in range(1, 6):
            if f"I.{k}" not in selected or f"II.{k}" not in selected:
                continue
            if runner.stop:
                break
            items.append(runner.guard(
                f"plain/dressed equivalence I.{k} ~ II.{k} (n={n})",
                lambda k=k, n=n: _from_case_report(appendix_equivalence(k, n, oracle)),
            ))
    sections.append(Section("plain/dressed equivalences", tuple(items)))

    # -- exact exponential profiles ---------------------------------------
    items = []
    for n in config.ns:
        if n not in PROFILE_NS or runner.stop:
            continue
        items.append(runner.guard(
            f"exponential profiles (n={n})",
            lambda n=n: _from_case_report(verify_section6(n, oracle)),
        ))
    sections.append(Section("exact exponential profiles", tuple(items)))

    return Report(config=config, sections=tuple(sections))
