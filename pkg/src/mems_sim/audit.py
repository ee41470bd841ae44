"""Re-evaluate the theory checks on a stored trajectory."""

import numpy as np

from .dynamics import check_comparison_principle
from .elliptic import solve_potential
from .grid import MappedGrid, MemsSimError, ModelParams
from .theory import (
    check_dissipation,
    check_envelope,
    check_identity_p9,
    check_jensen_bound_p10,
    check_lower_bound_p8,
    choose_parameters,
    lemma2_envelope,
    singularity_certificate,
)

IDENTITY_REL_TOL = 1e-3


def audit_trajectory(records, snapshots, params: ModelParams, grid: MappedGrid,
                     envelope_tol=1e-3, ineq_rel_tol=1e-4):
    """Run every trajectory-level check.

    ``snapshots`` is a list of ``(step, t, u)``; the first one must be the
    initial state. Returns ``(report, n_violations)``.
    """
    if not snapshots or snapshots[0][0] != 0:
        raise ValueError("the initial state (step 0) must be among the snapshots")
    u0 = snapshots[0][2]
    top = max(float(u0.max()), 0.0)
    _, C0 = lemma2_envelope(top)
    proof = choose_parameters(top, params.epsilon, params.lam)
    h = grid.base.h

    dissipation = check_dissipation(records, proof, h)
    envelope = check_envelope(records, C0, envelope_tol)
    dts = np.array([r.dt for r in records[1:]])
    comparison = check_comparison_principle(u0, dts, [(s, u) for s, _, u in snapshots], h)

    per_state = []
    ineq_violations = 0
    for step, t, u in snapshots:
        entry = {"step": step, "t": t, "min_u": float(u.min())}
        try:
            pf = solve_potential(u, params, grid)
        except MemsSimError as exc:
            entry["skipped"] = str(exc)
            per_state.append(entry)
            continue
        r9 = check_identity_p9(u, pf, grid, proof.p, params.epsilon)
        r8 = check_lower_bound_p8(u, pf, grid, proof.p, ineq_rel_tol)
        r10 = check_jensen_bound_p10(u, pf, grid, proof.p, params.epsilon, proof.alpha, ineq_rel_tol)
        p9_bad = r9.value > IDENTITY_REL_TOL * max(abs(r9.lhs), 1.0)
        entry.update(
            p9_residual=r9.value, p9_lhs=r9.lhs,
            p8_margin=r8.value, p8_violated=r8.violated,
            p10_margin=r10.value, p10_violated=r10.violated,
            p9_violated=p9_bad,
            max_principle_excess=pf.max_principle_violation(),
        )
        ineq_violations += int(r8.violated) + int(r10.violated) + int(p9_bad)
        per_state.append(entry)

    certificate = singularity_certificate(records, proof, C0)

    n_violations = (
        len(dissipation) + len(envelope) + len(comparison) + ineq_violations
        + len(certificate["violations"])
    )
    report = {
        "lambda": params.lam,
        "epsilon": params.epsilon,
        "lambda_star": proof.lambda_star,
        "alpha": proof.alpha,
        "p": proof.p,
        "delta": proof.delta,
        "C0": C0,
        "n_violations": n_violations,
        "dissipation_violations": [vars(v) for v in dissipation],
        "envelope_violations": envelope,
        "comparison_violations": comparison,
        "states": per_state,
        "certificate": certificate,
    }
    return report, n_violations
