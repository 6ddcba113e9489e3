"""2D projection (PCA and exact t-SNE) and cluster plot emission."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kirelex.corpus import RelationLabel

MACHINE_EPSILON = np.finfo(np.float64).eps

COLOR_MAP = {
    "reason": "#800080",     # purple
    "effect": "#008000",     # green
    "addiction": "#0000ff",  # blue
    "unlabeled": "#808080",
}


@dataclass
class ProjectionConfig:
    method: str = "tsne"
    seed: int = 0
    tsne_perplexity: float = 30.0
    tsne_iters: int = 1000
    tsne_learning_rate: float = 200.0
    tsne_early_exaggeration: float = 12.0
    tsne_exaggeration_iters: int = 250

    def __post_init__(self):
        if self.method not in ("pca", "tsne"):
            raise ValueError(f"unknown projection method: {self.method!r}")
        if self.tsne_iters < 250:
            raise ValueError("tsne_iters must be >= 250")


@dataclass(frozen=True)
class ProjectedPoint:
    tweet_id: str
    x: float
    y: float
    label: str  # relation label value or "unlabeled"


def pca_2d(x: np.ndarray) -> np.ndarray:
    """Project rows onto the top-2 principal components.

    Sign convention: each component's largest-magnitude coordinate is made
    positive, so the projection is deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / max(1, x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    components = eigvecs[:, order]
    for j in range(components.shape[1]):
        pivot = np.argmax(np.abs(components[:, j]))
        if components[pivot, j] < 0:
            components[:, j] = -components[:, j]
    return centered @ components


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _calibrate_affinities(
    sq_dists: np.ndarray, perplexity: float, tol: float = 1e-5, max_iter: int = 50
):
    """Per-point binary search on Gaussian precision to hit log(perplexity).

    Returns conditional affinities P(j|i) and the achieved per-point entropy.
    """
    n = sq_dists.shape[0]
    target = np.log(perplexity)
    p_cond = np.zeros((n, n))
    entropies = np.zeros(n)
    for i in range(n):
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        d_i = np.delete(sq_dists[i], i)
        for _ in range(max_iter):
            logits = -d_i * beta
            logits -= logits.max()
            p = np.exp(logits)
            total = p.sum()
            if total <= 0:
                p = np.full_like(p, 1.0 / p.size)
            else:
                p /= total
            entropy = -np.sum(p * np.log(np.maximum(p, MACHINE_EPSILON)))
            diff = entropy - target
            if abs(diff) <= tol:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        row = np.insert(p, i, 0.0)
        p_cond[i] = row
        entropies[i] = entropy
    return p_cond, entropies


@dataclass
class TsneResult:
    embedding: np.ndarray
    kl_history: list[float] = field(default_factory=list)
    point_entropies: np.ndarray | None = None


def tsne_2d(x: np.ndarray, config: ProjectionConfig) -> TsneResult:
    """Exact O(n^2) t-SNE with early exaggeration, momentum switch, and gains."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 3:
        raise ValueError("t-SNE needs at least 3 points")
    if config.tsne_perplexity >= (n - 1) / 3:
        raise ValueError(
            f"perplexity {config.tsne_perplexity} too large for n={n}; "
            f"require perplexity < (n-1)/3"
        )
    sq_dists = _squared_distances(x)
    off_diag = sq_dists[~np.eye(n, dtype=bool)]
    if np.all(off_diag == 0.0):
        raise ValueError("degenerate input: all points identical")

    p_cond, entropies = _calibrate_affinities(sq_dists, config.tsne_perplexity)
    p = (p_cond + p_cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)

    rng = np.random.default_rng(config.seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    kl_history: list[float] = []

    for iteration in range(config.tsne_iters):
        exaggerate = iteration < config.tsne_exaggeration_iters
        p_eff = p * config.tsne_early_exaggeration if exaggerate else p

        num = 1.0 / (1.0 + _squared_distances(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)

        pq = (p_eff - q) * num
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)

        momentum = 0.5 if iteration < 250 else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - config.tsne_learning_rate * gains * grad
        y = y + velocity
        y = y - y.mean(axis=0)

        kl_history.append(float(np.sum(p * np.log(p / q))))

    return TsneResult(embedding=y, kl_history=kl_history, point_entropies=entropies)


def project_2d(
    points: list[tuple[str, np.ndarray, RelationLabel | None]],
    config: ProjectionConfig,
) -> list[ProjectedPoint]:
    """Project (id, vector, label) triples to 2D with the configured method."""
    if len(points) < 3:
        raise ValueError("need at least 3 points to project")
    x = np.stack([np.asarray(vec, dtype=np.float64) for _, vec, _ in points])
    if config.method == "pca":
        coords = pca_2d(x)
    else:
        coords = tsne_2d(x, config).embedding
    out = []
    for (tweet_id, _, label), (px, py) in zip(points, coords):
        out.append(
            ProjectedPoint(
                tweet_id=tweet_id,
                x=float(px),
                y=float(py),
                label=label.value if label is not None else "unlabeled",
            )
        )
    return out


def _svg_document(points: list[ProjectedPoint]) -> str:
    width, height, margin = 640, 480, 40
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    span_x = (max(xs) - min(xs)) or 1.0
    span_y = (max(ys) - min(ys)) or 1.0

    def sx(v: float) -> float:
        return margin + (v - min(xs)) / span_x * (width - 2 * margin)

    def sy(v: float) -> float:
        return height - margin - (v - min(ys)) / span_y * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for p in points:
        color = COLOR_MAP.get(p.label, "#000000")
        parts.append(
            f'<circle cx="{sx(p.x):.3f}" cy="{sy(p.y):.3f}" r="3" fill="{color}">'
            f"<title>{p.tweet_id}</title></circle>"
        )
    legend_labels = sorted({p.label for p in points})
    for i, label in enumerate(legend_labels):
        ly = margin + 18 * i
        color = COLOR_MAP.get(label, "#000000")
        parts.append(f'<circle cx="{width - 130}" cy="{ly}" r="5" fill="{color}"/>')
        parts.append(
            f'<text x="{width - 118}" y="{ly + 4}" font-size="12" '
            f'font-family="sans-serif">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(points: list[ProjectedPoint], path: str | Path, format: str) -> None:
    """Write projected points as a CSV table or a deterministic SVG scatter."""
    if not points:
        raise ValueError("no points to plot")
    path = Path(path)
    if format == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "x", "y", "label"])
            for p in points:
                writer.writerow([p.tweet_id, repr(p.x), repr(p.y), p.label])
    elif format == "svg":
        path.write_text(_svg_document(points), encoding="utf-8")
    else:
        raise ValueError(f"unknown plot format: {format!r}")
