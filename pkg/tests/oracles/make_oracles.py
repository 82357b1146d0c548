"""Reference values computed with numpy/scipy only (no fingerfuse import).

Run once; the output is committed as frozen.json and read by the tests.
"""
import json
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.spatial.transform import Rotation

out = {}

# ANOVA from published sums of squares
F = (3.331 / 2) / (51.602 / 69)
out["table2"] = {"F": F, "p": float(stats.f.sf(F, 2, 69))}

# three groups of four seeded normals
rng = np.random.default_rng(20240501)
groups = [rng.normal(mu, 1.0, 4).tolist() for mu in (0.0, 0.5, 1.0)]
res = stats.f_oneway(*groups)
out["anova_three_groups"] = {"groups": groups, "F": float(res.statistic), "p": float(res.pvalue)}

# F and t tails on a grid
out["f_sf"] = [[f, a, b, float(stats.f.sf(f, a, b))]
               for f in (0.01, 0.5, 1.0, 2.227, 7.3, 40.0) for a in (1, 2, 5) for b in (3, 17, 69, 500)]
out["t_sf2"] = [[t, d, float(2 * stats.t.sf(t, d))] for t in (0.1, 1.0, 2.5, 6.0) for d in (2, 10, 497)]
out["t_ppf2"] = [[a, d, float(stats.t.ppf(1 - a / 2, d))] for a in (0.05, 0.01) for d in (3, 30, 496)]

# straight-line fit to the 800-cpi cubic over [0, 3]
c = [780.3591, 63.1833, -14.6930, 1.0582]
x = np.round(np.arange(0, 31) * 0.1, 10)
y = np.polynomial.polynomial.polyval(x, c)
lr = stats.linregress(x, y)
out["linear_800"] = {"slope": lr.slope, "intercept": lr.intercept, "r2": lr.rvalue ** 2,
                     "p": float(lr.pvalue)}

# quadratic fits with noise: estimates, errors and 95% CI coverage
truth = np.array([410.8021, 10.4840, -1.4685])


def noisy(seed):
    r = np.random.default_rng(seed)
    s = r.uniform(0.0, 7.0, 500)
    return s, np.polynomial.polynomial.polyval(s, truth) + r.normal(0.0, 5.0, 500)


def ols(s, v, deg):
    X = np.vander(s, deg + 1, increasing=True)
    beta, *_ = np.linalg.lstsq(X, v, rcond=None)
    resid = v - X @ beta
    dof = len(v) - deg - 1
    cov = np.linalg.inv(X.T @ X) * (resid @ resid) / dof
    se = np.sqrt(np.diag(cov))
    return beta, se, dof, resid


covered = np.zeros(3, dtype=int)
for seed in range(100):
    s, v = noisy(seed)
    beta, se, dof, _ = ols(s, v, 2)
    crit = stats.t.ppf(0.975, dof)
    covered += np.abs(beta - truth) <= crit * se
s, v = noisy(0)
beta, se, dof, resid = ols(s, v, 2)
tv = beta / se
ss_tot = ((v - v.mean()) ** 2).sum()
ss_res = resid @ resid
Fq = ((ss_tot - ss_res) / 2) / (ss_res / dof)
out["quadratic_noise"] = {
    "coverage": covered.tolist(),
    "seed0": {"beta": beta.tolist(), "se": se.tolist(),
              "p": [float(2 * stats.t.sf(abs(t), dof)) for t in tv],
              "r2": float(1 - ss_res / ss_tot), "F": float(Fq), "F_p": float(stats.f.sf(Fq, 2, dof))},
}

# rotations: intrinsic Z-Y-X (yaw, pitch, roll), quaternion scalar first
rng = np.random.default_rng(7)
rows = []
for _ in range(20):
    roll, yaw = rng.uniform(-np.pi, np.pi, 2)
    pitch = rng.uniform(-1.5, 1.5)
    r = Rotation.from_euler("ZYX", [yaw, pitch, roll])
    x_, y_, z_, w_ = r.as_quat()
    q = [w_, x_, y_, z_] if w_ >= 0 else [-w_, -x_, -y_, -z_]
    rows.append({"euler": [roll, pitch, yaw], "quat": q, "dcm": r.as_matrix().tolist()})
out["rotations"] = rows

path = Path(__file__).with_name("frozen.json")
path.write_text(json.dumps(out, indent=1) + "\n")
print(json.dumps({k: out[k] for k in ("table2", "linear_800")}, indent=1), out["quadratic_noise"]["coverage"])
