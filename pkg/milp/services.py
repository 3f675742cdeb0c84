import logging
import math
import time
from typing import Dict, List, Mapping, Optional, Sequence, TextIO, Tuple

import numpy as np
import numpy.typing as npt

from milp.backends import SolverBackend, get_backend
from milp.builder import var_name
from milp.entities import (
    MilpConfig,
    MilpInstance,
    MilpSolution,
    ObjectiveBreakdown,
    Sense,
    SolveStatus,
    VariableKind,
    VerificationReport,
)
from om_planner.errors import DivisionByZeroError, InvalidInputError
from scenario.entities import HOURS_PER_DAY

logger = logging.getLogger("om_planner")


def _family_array(
    values: Mapping[str, float], family: str, shape: Tuple[int, ...]
) -> npt.NDArray[np.float64]:
    array = np.zeros(shape)
    for index in np.ndindex(*shape):
        array[index] = values.get(var_name(family, *index), 0.0)
    return array


def _lth_array(values: Mapping[str, float], family: str, shape: Tuple[int, ...]) -> npt.NDArray[np.float64]:
    """Like ``_family_array`` for families whose first index is a 1-based day."""
    array = np.zeros(shape)
    for index in np.ndindex(*shape):
        array[index] = values.get(var_name(family, index[0] + 1, *index[1:]), 0.0)
    return array


def _term_breakdown(instance: MilpInstance, values: Mapping[str, float]) -> ObjectiveBreakdown:
    totals = {}
    for term, (coefficients, constant) in instance.objective_terms.items():
        totals[term] = constant + sum(coef * values.get(name, 0.0) for name, coef in coefficients.items())
    return ObjectiveBreakdown(
        short_term_profit=totals["short_term_profit"],
        long_term_profit=totals["long_term_profit"],
        prolonged_interruptions=-totals["prolonged_interruptions"],
        end_of_horizon=totals["end_of_horizon"],
    )


def solution_from_values(
    instance: MilpInstance,
    values: Mapping[str, float],
    status: SolveStatus,
    policy: str = "posydon",
    diagnostics: str = "",
    duration_ns: int = 0,
) -> MilpSolution:
    """Decision arrays, objective and breakdown for a full assignment."""
    I, D, J, S = instance.sizes
    H = HOURS_PER_DAY
    sth_maintenance = np.rint(_family_array(values, "m", (H, I))).astype(int)
    sth_yaw = np.rint(_family_array(values, "gamma", (H, I, J))).astype(int)
    lth_maintenance = np.rint(_lth_array(values, "m_l", (D, I, S))).astype(int)
    lth_yaw = np.rint(_lth_array(values, "gamma_l", (D, I, J, S))).astype(int)
    return MilpSolution(
        status=status,
        objective=instance.objective_value(values),
        breakdown=_term_breakdown(instance, values),
        gap=instance.config.gap if status is SolveStatus.OPTIMAL else None,
        sth_maintenance=sth_maintenance,
        sth_yaw=sth_yaw,
        lth_maintenance=lth_maintenance,
        lth_yaw=lth_yaw,
        rul=_family_array(values, "lam", (I, S)),
        values=dict(values),
        policy=policy,
        diagnostics=diagnostics,
        duration_ns=duration_ns,
    )


def solve(
    instance: MilpInstance, backend: Optional[SolverBackend] = None, policy: str = "posydon"
) -> MilpSolution:
    """
    Load ``instance`` into a backend, maximise and extract the decisions.

    A backend that fails or proves infeasibility yields a solution with that
    status and no decision arrays.

    Raises:
        SolverUnavailableError: no backend given and none can be found.
    """
    start = time.time_ns()
    backend = backend or get_backend()
    backend.load(instance)
    status = backend.optimize()
    duration_ns = time.time_ns() - start

    if not status.has_decisions:
        logger.warning(
            "MILP solve produced no decisions",
            extra={"status": status.value, "diagnostics": backend.diagnostics, "duration_ns": duration_ns},
        )
        return MilpSolution(
            status=status, policy=policy, diagnostics=backend.diagnostics, duration_ns=duration_ns
        )

    solution = solution_from_values(
        instance, backend.values(), status, policy, backend.diagnostics, duration_ns
    )
    logger.info(
        "Solved MILP instance",
        extra={
            "status": status.value,
            "objective": solution.objective,
            "gap": solution.gap,
            "duration_ns": duration_ns,
        },
    )
    return solution


def dmc_direct(
    day: int,
    sth_alive: int,
    lth_alive: Sequence[int],
    n_scenarios: int,
    config: MilpConfig,
    elapsed_days: float,
) -> float:
    """
    Dynamic maintenance cost rate for a task ``day`` days after observation.

    Day 0 is the short-term day. For day d ≥ 1 the rate is
    (C^PM·a_d + C^CM·(N_S − a_d)) / (a_0 + Σ_{d̃≤d} a_d̃ + N_S·t_c)
    where a_0 counts scenarios operational in the short term and a_d̃ those
    operational on long-term day d̃.

    Raises:
        InvalidInputError: negative day or counts outside [0, N_S].
        DivisionByZeroError: zero denominator.
    """
    if day < 0 or len(lth_alive) < day:
        raise InvalidInputError(f"Need long-term operational counts for days 1..{day}")
    counts = [sth_alive, *lth_alive[:day]]
    if any(count < 0 or count > n_scenarios for count in counts):
        raise InvalidInputError(f"Operational counts must lie in [0, {n_scenarios}]")

    alive = counts[-1]
    numerator = config.preventive_cost * alive + config.corrective_cost * (n_scenarios - alive)
    denominator = sum(counts) + n_scenarios * elapsed_days
    if denominator == 0:
        raise DivisionByZeroError("Maintenance cost rate is undefined with t_c = 0 and no operational scenario")
    return numerator / denominator


def implied_dmc(
    instance: MilpInstance, solution: MilpSolution
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """(c (N_I,), c^L (N_D, N_I)) as chosen by the solver."""
    I, D, _, _ = instance.sizes
    values = solution.values
    c = np.array([values.get(var_name("c", i), 0.0) for i in range(I)])
    c_l = np.array([[values.get(var_name("c_l", d, i), 0.0) for i in range(I)] for d in range(1, D + 1)])
    return c, c_l


def operational_counts(instance: MilpInstance, solution: MilpSolution) -> Tuple[npt.NDArray[np.int_], npt.NDArray[np.int_]]:
    """Scenarios with ζ = 1: (N_I,) short term and (N_D, N_I) per long-term day."""
    I, D, _, S = instance.sizes
    values = solution.values
    zeta = _family_array(values, "zeta", (I, S))
    zeta_l = _lth_array(values, "zeta_l", (D, I, S))
    return np.rint(zeta).sum(axis=1).astype(int), np.rint(zeta_l).sum(axis=2).astype(int)


def extract_rul_factors(
    instance: MilpInstance, solution: MilpSolution, turbine: int, scenario: int
) -> Tuple[List[float], List[float]]:
    """
    Per-period loading factors and period lengths (days) of the chosen schedule.

    Shut-down periods load with 0; periods where the turbine is already down
    in λ⁰ load with 1 so they neither gain nor lose life.
    """
    if solution.sth_yaw is None or solution.lth_yaw is None:
        raise InvalidInputError("Solution carries no yaw decisions")
    data = instance.data
    factors: List[float] = []
    lengths: List[float] = []
    for h in range(HOURS_PER_DAY):
        chosen = np.flatnonzero(solution.sth_yaw[h, turbine])
        if not data.zeta0[turbine, scenario]:
            factors.append(1.0)
        elif chosen.size:
            factors.append(float(data.factor_sth[h, turbine, chosen[0], scenario]))
        else:
            factors.append(0.0)
        lengths.append(1.0 / HOURS_PER_DAY)
    for d in range(instance.lth_days):
        chosen = np.flatnonzero(solution.lth_yaw[d, turbine, :, scenario])
        if not data.zeta0_lth[d, turbine, scenario]:
            factors.append(1.0)
        elif chosen.size:
            factors.append(float(data.factor_lth[d, turbine, chosen[0], scenario]))
        else:
            factors.append(0.0)
        lengths.append(1.0)
    return factors, lengths


def _linearization_residual(instance: MilpInstance, values: Mapping[str, float]) -> float:
    I, D, _, S = instance.sizes
    n = var_name
    products: List[Tuple[str, str, str, float]] = []
    for i in range(I):
        scale = max(1.0, instance.config.corrective_cost / instance.data.elapsed_days[i])
        for h in range(HOURS_PER_DAY):
            products.append((n("alpha_m", h, i), n("c", i), n("m", h, i), scale))
        for s in range(S):
            products.append((n("alpha_c", i, s), n("c", i), n("zeta", i, s), scale))
            for d in range(1, D + 1):
                products.append((n("alpha_m_l", d, i, s), n("c_l", d, i), n("m_l", d, i, s), scale))
                products.append((n("alpha_c0_l", d, i, s), n("c_l", d, i), n("zeta", i, s), scale))
                for e in range(1, d + 1):
                    products.append((n("alpha_c_l", e, d, i, s), n("c_l", d, i), n("zeta_l", e, i, s), scale))
    worst = 0.0
    for product, factor, indicator, scale in products:
        gap = abs(values.get(product, 0.0) - values.get(factor, 0.0) * values.get(indicator, 0.0))
        worst = max(worst, gap / scale)
    return worst


def verify_solution(
    instance: MilpInstance, solution: MilpSolution, tolerance: float = 1e-6
) -> VerificationReport:
    """
    Re-evaluate every row against the solution and reconcile the objective.

    Row violations are relative to the row's largest coefficient or its
    right-hand side, whichever is larger (at least 1).
    """
    from milp.evaluator import objective_terms

    values = solution.values
    max_violation: Dict[str, float] = {tag: 0.0 for tag in instance.tags}
    violated: List[str] = []
    for constraint in instance.constraints:
        scale = max([1.0, abs(constraint.rhs), *(abs(coef) for coef in constraint.coefficients.values())])
        violation = constraint.residual(values) / scale
        max_violation[constraint.tag] = max(max_violation[constraint.tag], violation)
        if violation > tolerance:
            violated.append(constraint.name)

    for name, variable in instance.variables.items():
        value = values.get(name, 0.0)
        if value < variable.lower - tolerance or value > variable.upper + tolerance:
            violated.append(name)
        elif variable.kind is not VariableKind.CONTINUOUS and abs(value - round(value)) > tolerance:
            violated.append(name)

    breakdown = objective_terms(instance, values)
    objective = solution.objective if solution.objective is not None else instance.objective_value(values)
    objective_residual = abs(breakdown.total - objective) / max(1.0, abs(objective))
    report = VerificationReport(
        max_violation=max_violation,
        violated_rows=tuple(violated),
        breakdown=breakdown,
        objective_residual=objective_residual,
        linearization_residual=_linearization_residual(instance, values),
        tolerance=tolerance,
    )
    if not report.ok:
        logger.warning(
            "Solution failed verification",
            extra={"violated": len(violated), "objective_residual": objective_residual},
        )
    return report


def _number(value: float) -> str:
    return f"{value:.12g}"


def _linear_form(coefficients: Mapping[str, float]) -> List[str]:
    tokens = []
    for name, coef in coefficients.items():
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        tokens.append(f"{sign} {name}" if magnitude == 1 else f"{sign} {_number(magnitude)} {name}")
    return tokens or ["0"]


def _wrapped(head: str, tokens: Sequence[str], tail: str = "", width: int = 250) -> List[str]:
    lines, current = [], head
    for token in [*tokens, tail] if tail else tokens:
        if len(current) + len(token) + 1 > width:
            lines.append(current)
            current = "  "
        current = f"{current} {token}"
    lines.append(current)
    return lines


def export_lp(instance: MilpInstance, stream: Optional[TextIO] = None) -> str:
    """
    The instance in CPLEX LP syntax, each row family preceded by a ``\\ tag:``
    comment. Written to ``stream`` too when one is given.
    """
    I, D, J, S = instance.sizes
    lines = [
        "\\ om_planner yaw and maintenance instance",
        f"\\ turbines={I} lth_days={D} yaw_levels={J} scenarios={S}",
        f"\\ objective constant: {_number(instance.objective_constant)}",
        "Maximize",
    ]
    lines += _wrapped(" obj:", _linear_form(instance.objective))
    lines.append("Subject To")
    current_tag: Optional[str] = None
    senses = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}
    for constraint in instance.constraints:
        if constraint.tag != current_tag:
            current_tag = constraint.tag
            lines.append(f"\\ tag: {current_tag}")
        lines += _wrapped(
            f" {constraint.name}:",
            _linear_form(constraint.coefficients),
            f"{senses[constraint.sense]} {_number(constraint.rhs)}",
        )

    bounds, general, binary = [], [], []
    for name, variable in instance.variables.items():
        if variable.kind is VariableKind.BINARY and variable.upper >= 1:
            binary.append(name)
            continue
        if variable.kind is not VariableKind.CONTINUOUS:
            general.append(name)
        lower = "-inf" if math.isinf(variable.lower) else _number(variable.lower)
        if math.isinf(variable.upper):
            if variable.lower != 0:
                bounds.append(f" {name} >= {lower}")
        else:
            bounds.append(f" {lower} <= {name} <= {_number(variable.upper)}")
    lines.append("Bounds")
    lines += bounds
    if general:
        lines.append("General")
        lines += _wrapped("", general)
    if binary:
        lines.append("Binary")
        lines += _wrapped("", binary)
    lines.append("End")

    text = "\n".join(lines) + "\n"
    if stream is not None:
        stream.write(text)
    return text
