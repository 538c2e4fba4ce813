"""Regenerate the bundled expression fixture.

The table is synthetic but shaped like a real FPKM matrix: 200 gene rows
over 74 conditions, strictly non-negative, a heavy-tailed magnitude
spread across genes, and one strong common factor so the full-table
covariance has a dominant but not overwhelming first PC.

The committed TSV is the source of truth; this script documents how it
was made and lets it be rebuilt byte-for-byte (numpy Generator streams
are stable across releases).

Usage: python3 tools/make_fixture.py [out_path]
"""

import sys
from pathlib import Path

import numpy as np

SEED = 11
GENES = 200
CONDITIONS = 74
FACTOR_STRENGTH = 0.9   # common-factor weight in the latent layer
LOG_SCALE = 0.55        # latent-to-expression exponent
NOISE = 1.0             # iid latent noise weight
GENE_SCALE_SD = 1.1     # lognormal sd of per-gene magnitudes

DEFAULT_OUT = Path(__file__).resolve().parents[1] / (
    "src/hdpca/data/expression_200x74.tsv"
)


def build() -> np.ndarray:
    rng = np.random.default_rng(SEED)
    loadings = 1.0 + 0.35 * rng.standard_normal(CONDITIONS)
    factor = rng.standard_normal(GENES)
    eps = rng.standard_normal((GENES, CONDITIONS))
    latent = FACTOR_STRENGTH * np.outer(factor, loadings) + NOISE * eps
    gene_scale = np.exp(rng.normal(1.5, GENE_SCALE_SD, size=GENES))
    x = gene_scale[:, None] * np.exp(LOG_SCALE * latent)
    return np.round(x, 3)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_OUT
    x = build()
    with out.open("w", encoding="utf-8") as fh:
        fh.write(
            "gene_id\t" + "\t".join(f"C{j + 1:02d}" for j in range(CONDITIONS)) + "\n"
        )
        for i, row in enumerate(x):
            fh.write(f"G{i + 1:04d}\t" + "\t".join(f"{v:.3f}" for v in row) + "\n")
    print(f"wrote {out} ({x.shape[0]} genes x {x.shape[1]} conditions)")


if __name__ == "__main__":
    main()
