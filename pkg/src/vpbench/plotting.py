"""Render result tables to PNG files (non-interactive backend)."""

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ['plot_table']

_LABELS = {
    'mi_exact': 'exact', 'mi_piecewise': 'piecewise linear',
    'mi_awgn': 'AWGN proxy', 'vp_exact': 'VP', 'vp_ub': 'VP-UB (clamped)',
    'vp_lb': 'VP-LB', 'es_rate': 'VP-ES', 'grm_rate': 'VP-GRM',
    'sus_rate': 'VP-SUS', 'vp': 'VP', 'vp_ra': 'VP-RA', 'vp_grm': 'VP-GRM',
    'vp_grm_ra': 'VP-GRM-RA', 'grm_users': 'VP-GRM', 'sus_users': 'VP-SUS',
    'grm_mults': 'VP-GRM', 'sus_mults': 'VP-SUS',
}

# x column, plotted y columns, y label
_LAYOUT = {
    'fig1': ('lambda', ['mi_exact', 'mi_piecewise', 'mi_awgn'],
             'mutual information (bits)'),
    'sumrate_sweep': ('snr_db', ['vp_exact', 'vp_ub', 'vp_lb'],
                      'sum rate (bits/s/Hz)'),
    'sched_loss': ('snr_db', ['es_rate', 'grm_rate', 'sus_rate'],
                   'sum rate (bits/s/Hz)'),
    'ra_compare': ('snr_db', ['vp', 'vp_ra', 'vp_grm', 'vp_grm_ra'],
                   'sum rate (bits/s/Hz)'),
    'table_users': ('snr_db', ['grm_users', 'sus_users'],
                    'mean selected users'),
    'table_mults': ('snr_db', ['grm_mults', 'sus_mults'],
                    'mean vector multiplications'),
}


def plot_table(table, experiment: str, path: str) -> str:
    """Line plot of `table` for `experiment`, saved to `path`."""
    if experiment == 'sched_vs_users':
        x = 'u'
        ys = [c for c in table.columns if c.endswith('db')
              and not c.startswith('sus_alpha')]
        ylabel = 'sum rate (bits/s/Hz)'
    else:
        x, ys, ylabel = _LAYOUT[experiment]
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for y in ys:
        ax.plot(table.column(x), table.column(y), marker='o', markersize=3,
                label=_LABELS.get(y, y))
    ax.set_xlabel({'snr_db': 'SNR (dB)', 'lambda': r'$\lambda$',
                   'u': 'number of users U'}[x])
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
