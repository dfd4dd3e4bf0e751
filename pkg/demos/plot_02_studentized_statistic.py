"""
The studentized statistic along a trial
=======================================

Each look pools all stages so far and studentizes the mean difference with
the arm-specific variances. The t-approximation replaces a normal critical
value with the t quantile at the same tail level and Welch degrees of freedom.
"""

from gsperm import TrialData, statistic_path, welch_df
from gsperm.special import std_normal_sf, t_isf

# Two stages of three patients per arm
data = TrialData.from_arrays([[1.0, 2.0, 3.0], [2.5, 4.0, 1.5]],
                             [[0.0, 1.0, 2.0], [0.5, -1.0, 3.2]])

for look in statistic_path(data).looks:
    df = welch_df(look)
    print(f"look {look.k}: m={look.m_cum} n={look.n_cum} "
          f"diff={look.mu1_hat - look.mu2_hat:.3f} S={look.S:.4f} "
          f"info={look.info_hat:.3f} welch df={df:.2f}")
    # the normal bound 2.157 mapped to the t scale at this look
    print(f"   c=2.157 on the t scale: {t_isf(std_normal_sf(2.157), df):.4f}")
