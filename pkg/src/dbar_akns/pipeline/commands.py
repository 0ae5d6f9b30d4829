from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
from more_itertools import chunked

from dbar_akns.akns.potentials import reconstruct_potentials
from dbar_akns.cauchy.checks import chi_disk, closed_form_chi_disk, linearity_check
from dbar_akns.cauchy.transform import cauchy_transform, cartesian_mesh, oracle_values
from dbar_akns.errors import DbarError, SmallNormViolation, exit_code_for
from dbar_akns.geometry.grids import UNIT_DISK, build_disk_grid
from dbar_akns.globals import TARGET_CHUNK
from dbar_akns.logger import error, info, warn
from dbar_akns.models.config import RunConfig
from dbar_akns.operator.estimates import estimate_operator_norm, lemma2_membership
from dbar_akns.operator.solver import dbar_residual, solve_psi
from dbar_akns.pipeline.context import RunContext
from dbar_akns.pipeline.verify import run_verify
from dbar_akns.repositories.results_repository import CauchyRow, ReconstructRow, ResultsRepository, SolveRow
from dbar_akns.spaces.fields import ScalarField
from dbar_akns.workers.w_pool import map_ordered


__all__ = ["COMMANDS", "run_pipeline", "run_cauchy", "run_solve", "run_reconstruct"]


def _random_targets(ctx: RunContext, n: int, radius: float) -> np.ndarray:
    u = ctx.rng(1).random((n, 2))
    return radius * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])


def run_cauchy(ctx: RunContext) -> int:
    cfg = ctx.config.cauchy
    grid = build_disk_grid(UNIT_DISK, cfg.nr, cfg.ntheta)
    f = chi_disk if cfg.density == "chi_disk" else ctx.data.r_plus
    field = ScalarField.from_evaluator(grid, f)
    targets = _random_targets(ctx, cfg.n_targets, 2.0)
    mesh = cartesian_mesh(UNIT_DISK, cfg.oracle_n)

    batches = [np.asarray(b) for b in chunked(targets, TARGET_CHUNK)]
    corrected = np.concatenate([o.value.values for o in
                                map_ordered(lambda b: cauchy_transform(field, b), batches, ctx.workers)])
    oracle = np.concatenate([o.value.values for o in
                             map_ordered(lambda b: oracle_values(f, UNIT_DISK, b, cfg.oracle_n, mesh=mesh),
                                         batches, ctx.workers)])

    rows: List[CauchyRow] = []
    for k, c, o in zip(targets, corrected, oracle):
        rows.append(CauchyRow(k_re=k.real, k_im=k.imag, value_re=c.real, value_im=c.imag,
                              scheme="corrected", h=grid.h))
        rows.append(CauchyRow(k_re=k.real, k_im=k.imag, value_re=o.real, value_im=o.imag,
                              scheme="oracle", h=mesh.h))
    ctx.repo.write_rows("cauchy.csv", CauchyRow, rows)

    report = ctx.new_report()
    agreement = float(np.max(np.abs(corrected - oracle)))
    tol = 10 * (grid.h + mesh.h) * max(field.sup, 1e-300)
    report.add("scheme_agreement", agreement, 0.0, tol, agreement <= tol, density=cfg.density)
    if cfg.density == "chi_disk":
        exact = closed_form_chi_disk(targets)
        for scheme, values, t in (("corrected", corrected, 5e-3), ("oracle", oracle, 10 * mesh.h)):
            err = float(np.max(np.abs(values - exact)))
            report.add(f"cauchy_closed_form_{scheme}", err, 0.0, t, err <= t)
    report.extend(linearity_check(grid, seed=ctx.config.seed))
    ctx.repo.write_report(report)
    failed = report.failed()
    info(f"cauchy: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed")
    return 1 if failed else 0


def run_solve(ctx: RunContext) -> int:
    cfg = ctx.config
    data, grids = ctx.data, ctx.grids

    def task(x: float):
        result = solve_psi(data, x, grids, tol=cfg.solver.tol, max_iter=cfg.solver.max_iter, seed=cfg.seed)
        row = SolveRow(
            x=x,
            solver_iterations=result.iterations,
            residual=result.residual,
            dbar_residual=dbar_residual(result.psi, data, x),
            contraction_ratio=result.contraction_ratio,
        )
        return row, result

    outcomes = map_ordered(task, ctx.x_grid, ctx.workers)
    done = [o.value for o in outcomes if o.ok]
    errors = [o.error for o in outcomes if not o.ok]
    ctx.repo.write_rows("solve.csv", SolveRow, [row for row, _ in done])

    report = ctx.new_report()
    v = cfg.verify
    estimate = estimate_operator_norm(data, cfg.norm, v.x_samples, v.trials, cfg.seed,
                                      grids=ctx.verify_grids, n_pairs=v.holder_pairs)
    report.add("operator_norm_estimate", estimate.norm_lower_bound, 1.0, 0.0, estimate.small_norm,
               margin=estimate.small_norm_margin, p=estimate.p, q=estimate.q, alpha=estimate.alpha)
    if not estimate.small_norm:
        warn(f"operator norm estimate {estimate.norm_lower_bound:.4g} >= 1: small-norm condition fails")

    for row, result in done:
        report.add(f"neumann_x={row.x:.6g}", row.residual, cfg.solver.tol, 0.0, True,
                   iterations=row.solver_iterations, contraction_ratio=row.contraction_ratio,
                   dbar_residual=row.dbar_residual)
    if done:
        _, first = done[0]
        report.extend(lemma2_membership(first.psi, data, first.x, cfg.norm))
    for o in outcomes:
        if not o.ok:
            report.add(f"neumann_x={o.item:.6g}", float("nan"), cfg.solver.tol, 0.0, False,
                       error=type(o.error).__name__, message=str(o.error))
    ctx.repo.write_report(report)

    if not estimate.small_norm and not errors:
        return SmallNormViolation.exit_code
    return exit_code_for(errors)


def run_reconstruct(ctx: RunContext) -> int:
    cfg = ctx.config
    sample = reconstruct_potentials(ctx.data, ctx.x_grid, ctx.grids, tol=cfg.solver.tol,
                                    max_iter=cfg.solver.max_iter, workers=ctx.workers, seed=cfg.seed)

    rows = [
        ReconstructRow(x=x, u_re=u.real, u_im=u.imag, v_re=v.real, v_im=v.imag,
                       solver_iterations=int(it), residual=float(res))
        for x, u, v, it, res, ok in zip(sample.x_grid, sample.u, sample.v, sample.iterations,
                                        sample.residuals, sample.ok)
        if ok
    ]
    ctx.repo.write_rows("reconstruct.csv", ReconstructRow, rows)

    report = ctx.new_report()
    report.add("reconstruct_complete", len(rows), len(sample.x_grid), 0.0, sample.complete,
               failed_x=sorted(sample.failures))
    residuals = sample.residuals[sample.ok]
    worst = float(np.max(residuals)) if residuals.size else 0.0
    report.add("reconstruct_residual", worst, cfg.solver.tol, 0.0, worst <= 100 * cfg.solver.tol)
    diag = sample.diagonal[sample.ok]
    report.add("moment_diagonal_magnitude", float(np.max(diag)) if diag.size else 0.0, 0.0, 0.0, True)
    report.add("potential_norms", sample.sup_u, 0.0, 0.0, True,
               sup_u=sample.sup_u, sup_v=sample.sup_v, l2_u=sample.l2_u, l2_v=sample.l2_v)
    ctx.repo.write_report(report)

    return exit_code_for(list(sample.failures.values()))


COMMANDS: Dict[str, Callable[[RunContext], int]] = {
    "cauchy": run_cauchy,
    "solve": run_solve,
    "reconstruct": run_reconstruct,
    "verify": run_verify,
}


def run_pipeline(config: RunConfig, command: str, out_dir: Path) -> int:
    if command not in COMMANDS:
        raise ValueError(f"command {command} does not exist")

    ctx = RunContext(config, command, ResultsRepository(out_dir))
    info(f"{command}: preset={config.preset} amplitudes={config.amplitudes} workers={ctx.workers}")
    try:
        return COMMANDS[command](ctx)
    except DbarError as e:
        error(f"{command} failed: {type(e).__name__}: {e}")
        return e.exit_code
