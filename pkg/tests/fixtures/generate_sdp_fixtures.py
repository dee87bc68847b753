"""Generate certified optima for random LMI problems with an external solver.

Run offline (requires cvxpy); writes ``sdp_certified.json`` next to this
file.  The test suite never imports cvxpy: it replays the frozen problems
through the in-tree solver and compares against the recorded optima.

Each instance minimizes ``c @ y`` subject to one 6x6 LMI block
``F0 + sum_k y_k F_k >= 0`` in four variables.  The data are drawn so that
a strictly feasible bounded optimum exists: F0 = I and c_k = <F_k, X0> for
a random positive definite X0, which makes X0 a strictly feasible dual
point and bounds the objective from below.
"""

import json
import pathlib

import cvxpy as cp
import numpy as np

N_INSTANCES = 50
N_VARS = 4
BLOCK = 6


def main() -> None:
    rng = np.random.default_rng(20260815)
    instances = []
    for idx in range(N_INSTANCES):
        fks = []
        for _ in range(N_VARS):
            a = rng.standard_normal((BLOCK, BLOCK))
            fks.append(0.5 * (a + a.T))
        fks = np.array(fks)
        x0 = rng.standard_normal((BLOCK, BLOCK))
        x0 = x0 @ x0.T + 0.5 * np.eye(BLOCK)
        c = np.array([float(np.vdot(fk, x0)) for fk in fks])

        y = cp.Variable(N_VARS)
        expr = np.eye(BLOCK) + sum(y[k] * fks[k] for k in range(N_VARS))
        prob = cp.Problem(cp.Minimize(c @ y), [expr >> 0])
        prob.solve(solver=cp.CLARABEL)
        if prob.status != cp.OPTIMAL:
            raise RuntimeError(f"instance {idx}: reference solve failed ({prob.status})")
        instances.append(
            {
                "objective": c.tolist(),
                "coeffs": fks.tolist(),
                "opt_value": float(prob.value),
                "y_opt": [float(v) for v in y.value],
            }
        )
        print(f"instance {idx}: opt={prob.value:.10f}")

    out = pathlib.Path(__file__).parent / "sdp_certified.json"
    out.write_text(json.dumps({"block": BLOCK, "n_vars": N_VARS, "instances": instances}))
    print(f"wrote {len(instances)} instances to {out}")


if __name__ == "__main__":
    main()
