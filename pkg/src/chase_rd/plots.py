"""Figure rendering for CLI results (PNG files next to the data output)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ValidationError  # noqa: E402

_DPI = 150


def render(result: dict, out_path: str) -> str:
    """Render the figure for a result dict; returns the PNG path."""
    png = os.path.splitext(out_path)[0] + ".png"
    kind = result["kind"]
    if kind == "waterfill":
        _render_waterfill(result, png)
    elif kind == "awgn-rule":
        _render_awgn_rule(result, png)
    elif kind in ("exact", "optimize"):
        _render_flip_grid(result, png)
    elif kind == "simulate":
        _render_simulation(result, png)
    else:
        raise ValidationError(f"no figure for kind {kind!r}")
    return png


def _render_waterfill(result: dict, png: str):
    classes = result["classes"]
    idx = [row["class"] for row in classes]
    fig, (ax_p, ax_q) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax_p.bar(idx, [row["p_j"] for row in classes], width=0.6, color="#7aa6c2", label="$p_j$")
    ax_p.bar(idx, [row["D_star_j"] for row in classes], width=0.6, color="#c2b47a",
             label="$D_j^*$")
    ax_p.axhline(result["nu"], color="red", linestyle="--", label=r"water level $\nu$")
    ax_p.set_xlabel("class"), ax_p.set_ylabel("probability")
    ax_p.set_xticks(idx)
    ax_p.legend(fontsize=8)
    ax_q.bar(idx, [row["q_j"] for row in classes], width=0.6, color="#8c7ac2")
    ax_q.set_xlabel("class"), ax_q.set_ylabel("flip probability $q_j$")
    ax_q.set_xticks(idx)
    fig.suptitle(f"rate {result['rate_bits_per_symbol']:.4g} bit/sym, "
                 f"log2 L = {result['log2_L']:.4g}", fontsize=9)
    fig.tight_layout()
    fig.savefig(png, dpi=_DPI)
    plt.close(fig)


def _render_awgn_rule(result: dict, png: str):
    has_alloc = bool(result["allocation"])
    n_axes = 2 if has_alloc else 1
    fig, axes = plt.subplots(1, n_axes, figsize=(4 * n_axes, 3.2), squeeze=False)
    axes = axes[0]
    sigmas = [lvl["sigma"] for lvl in result["levels"]]
    if has_alloc:
        ax = axes[0]
        for lvl in result["levels"]:
            rows = [r for r in result["allocation"] if r["sigma"] == lvl["sigma"]]
            x = [r["index"] for r in rows]
            p = [r["p_of_llr"] for r in rows]
            d = [r["d_star"] for r in rows]
            line, = ax.plot(x, p, lw=1.0, label=f"$\\sigma$={lvl['sigma']}")
            ax.fill_between(x, 0, d, alpha=0.3, color=line.get_color())
        ax.set_xlabel("sorted index"), ax.set_ylabel(r"$p(\ell_i)$")
        ax.legend(fontsize=8)
    ax = axes[-1]
    for sigma in sigmas:
        rows = [r for r in result["rule"] if r["sigma"] == sigma]
        ax.plot([r["llr"] for r in rows], [r["q"] for r in rows], lw=1.2,
                label=f"$\\sigma$={sigma}")
    ax.set_xlabel("LLR"), ax.set_ylabel(r"$q(\ell)$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png, dpi=_DPI)
    plt.close(fig)


def _render_flip_grid(result: dict, png: str):
    rows = result["rows"]
    classes = sorted({r["class"] for r in rows})
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for cls in classes:
        sub = [r for r in rows if r["class"] == cls]
        n = [r["N"] for r in sub]
        ax.semilogx(n, [r["q_rdf"] for r in sub], "--", label=f"class {cls} rule")
        if any(r["q_opt"] is not None for r in sub):
            ax.semilogx(n, [r["q_opt"] for r in sub], "o-", ms=4, label=f"class {cls} optimal")
    ax.set_xlabel("block length N"), ax.set_ylabel("flip probability")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png, dpi=_DPI)
    plt.close(fig)


def _render_simulation(result: dict, png: str):
    rep = result["report"]
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    err_low = rep["miss_rate"] - rep["ci_low"]
    err_high = rep["ci_high"] - rep["miss_rate"]
    ax.errorbar([0], [rep["miss_rate"]], yerr=[[err_low], [err_high]], fmt="o", capsize=4,
                label="list miss")
    ax.errorbar([1], [rep["decode_error_rate"]],
                yerr=[[rep["decode_error_rate"] - rep["decode_error_ci_low"]],
                      [rep["decode_error_ci_high"] - rep["decode_error_rate"]]],
                fmt="s", capsize=4, label="decode error")
    ax.set_xticks([0, 1], ["miss", "error"])
    ax.set_ylabel("rate")
    ax.set_title(f"{rep['trials']} trials, L={rep['list_size']}", fontsize=9)
    fig.tight_layout()
    fig.savefig(png, dpi=_DPI)
    plt.close(fig)
