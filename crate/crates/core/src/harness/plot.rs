//! Generated matplotlib scripts that render the CSV artifacts of a run.

pub(crate) fn study_script(label: &str, meshes: &[usize]) -> String {
    let list: Vec<String> = meshes.iter().map(|m| m.to_string()).collect();
    format!(
        r#"# Generated by radtrans. Run from the output directory: python {label}_plot.py
import csv

import matplotlib.pyplot as plt
import numpy as np

LABEL = "{label}"
MESHES = [{meshes}]

with open(f"{{LABEL}}_table.csv") as fh:
    rows = list(csv.DictReader(fh))
n = [int(r["mesh"]) for r in rows]
err = [float(r["l1_error"]) for r in rows]

fig, ax = plt.subplots()
ax.loglog(n, err, "o-", label="L1 error")
ax.loglog(n, [err[0] * (n[0] / m) ** 2 for m in n], "k--", label="second order")
ax.set_xlabel("N (N x N mesh)")
ax.set_ylabel("scalar flux L1 error")
ax.legend()
fig.savefig(f"{{LABEL}}_convergence.png", dpi=150)

for m in MESHES:
    with open(f"{{LABEL}}_error_{{m}}.csv") as fh:
        cells = list(csv.DictReader(fh))
    grid = np.zeros((m, m))
    for c in cells:
        grid[int(c["j"]), int(c["i"])] = float(c["abs_error"])
    fig, ax = plt.subplots()
    im = ax.imshow(grid, origin="lower", extent=(0, 1, 0, 1))
    fig.colorbar(im, ax=ax, label="|phi - phi_ref|")
    ax.set_title(f"{{LABEL}} error, {{m}}x{{m}}")
    fig.savefig(f"{{LABEL}}_error_{{m}}.png", dpi=150)
"#,
        label = label,
        meshes = list.join(", ")
    )
}

pub(crate) fn regularity_script(label: &str) -> String {
    format!(
        r#"# Generated by radtrans. Run from the output directory: python {label}_regularity_plot.py
import csv

import matplotlib.pyplot as plt

LABEL = "{label}"

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, order in zip(axes, (1, 2)):
    with open(f"{{LABEL}}_regularity_d{{order}}.csv") as fh:
        rows = list(csv.DictReader(fh))
    rho = [float(r["rho"]) for r in rows]
    ax.loglog(rho, [abs(float(r["derivative_estimate"])) for r in rows], "o", label="estimate")
    ax.loglog(rho, [abs(float(r["fitted_value"])) for r in rows], "-", label="fit")
    ax.set_xlabel("distance to boundary")
    ax.set_title(f"normal derivative of order {{order}}")
    ax.legend()
fig.savefig(f"{{LABEL}}_regularity.png", dpi=150)
"#,
        label = label
    )
}
