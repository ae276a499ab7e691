"""Conservative variance estimation for two-way dependent panel scores.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from ._core import (  # noqa: F401
    ComponentDgp,
    PanelIndex,
    __version__,
    andrews_bandwidth,
    brute_force_estimate,
    clt_check,
    delta_boundary,
    delta_window,
    distance,
    example1_gap,
    kernel_weight,
    neighborhood_cost,
    ols_sandwich,
    psd_gap_report,
    run_monte_carlo,
    simulate_panel,
    v_adj,
    v_chs_estimand,
    v_con_estimand,
    v_true,
    variance_estimate,
)
