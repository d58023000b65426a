"""Figures for size/power study results.

All functions take the JSON form of a study result (``StudyResult.to_dict()``
or the file written by ``vinegof power-study``) and draw on a matplotlib
``Axes``. A new figure is created when ``ax`` is omitted. Nothing here is used
by the command line, which only writes JSON.
"""
import numpy as np
from matplotlib.figure import Figure


def rejection_curve(p_values, alphas):
    """Empirical rejection rate ``mean(p <= alpha)`` at each level.

    Parameters
    ----------
    p_values : array_like
    alphas : array_like

    Returns
    -------
    ndarray, same shape as ``alphas``
    """
    p = np.sort(np.asarray(p_values, dtype=float))
    a = np.asarray(alphas, dtype=float)
    if p.size == 0:
        return np.full(a.shape, np.nan)
    return np.searchsorted(p, a, side="right") / p.size


def _axes(ax, figsize=(6.0, 4.0)):
    if ax is not None:
        return ax
    return Figure(figsize=figsize, layout="constrained").add_subplot()


def _results(result):
    return result["results"] if "results" in result else result


def plot_rejection_curves(result, model, tests=None, ax=None, n_levels=201):
    """Rejection rate against the nominal level for one model.

    Under the true model the curves should follow the diagonal (size);
    under an alternative, higher curves mean more power.

    Parameters
    ----------
    result : dict
        Study result in JSON form.
    model : str
        ``"true"`` or an alternative name.
    tests : sequence of str, optional
        Subset and order of tests; all by default.
    ax : matplotlib.axes.Axes, optional
    n_levels : int
        Number of grid points on ``[0, 1]``.

    Returns
    -------
    matplotlib.axes.Axes
    """
    res = _results(result)
    ax = _axes(ax)
    alphas = np.linspace(0.0, 1.0, n_levels)
    for t in tests or list(res):
        ax.step(alphas, rejection_curve(res[t][model]["p_values"], alphas), where="post",
                label=t)
    ax.plot([0, 1], [0, 1], color="0.6", linestyle=":", linewidth=1)
    ax.set(xlim=(0, 1), ylim=(0, 1.02), xlabel="nominal level",
           ylabel="rejection rate", title=model)
    ax.legend(fontsize="small", frameon=False)
    return ax


def plot_power_bars(result, alpha=None, tests=None, models=None, ax=None):
    """Grouped bars of the rejection rate per test, one bar per model.

    Parameters
    ----------
    result : dict
        Study result in JSON form.
    alpha : float, optional
        Level at which rates are recomputed from the p-values; the stored
        estimates are used when omitted.
    tests, models : sequence of str, optional
        Subsets and orders; all by default.
    ax : matplotlib.axes.Axes, optional

    Returns
    -------
    matplotlib.axes.Axes
    """
    res = _results(result)
    tests = list(tests or res)
    models = list(models or res[tests[0]])
    if alpha is None:
        alpha = result.get("alpha")
    ax = _axes(ax, figsize=(max(6.0, 0.9 * len(tests) * len(models) / 2), 4.0))
    width = 0.8 / len(models)
    x = np.arange(len(tests))
    for j, m in enumerate(models):
        if alpha is None:
            rates = [res[t][m]["estimate"] for t in tests]
        else:
            rates = [float(rejection_curve(res[t][m]["p_values"], [alpha])[0]) for t in tests]
        ax.bar(x + (j - (len(models) - 1) / 2) * width, rates, width, label=m)
    if alpha is not None:
        ax.axhline(alpha, color="0.3", linestyle="--", linewidth=1)
    ax.set_xticks(x, tests, rotation=45, ha="right")
    ax.set(ylim=(0, 1), ylabel="rejection rate")
    ax.legend(fontsize="small", frameon=False, ncols=min(len(models), 4))
    return ax


def study_figure(result, alpha=None, tests=None):
    """Bars of all models next to the rejection curves of every model.

    Returns
    -------
    matplotlib.figure.Figure
    """
    res = _results(result)
    models = list(res[next(iter(res))])
    fig = Figure(figsize=(4.0 * (len(models) + 1), 4.0), layout="constrained")
    axes = fig.subplots(1, len(models) + 1)
    plot_power_bars(result, alpha, tests, ax=axes[0])
    for ax, m in zip(axes[1:], models):
        plot_rejection_curves(result, m, tests, ax=ax)
    return fig
