"""Compare time-domain and frequency-domain zeroth-order currents.

Usage: python3 scripts/oracle_crosscheck.py
"""

import time
import warnings

import numpy as np

from ness_chain.bath_kernels import two_bath_set
from ness_chain.chain_model import ChainModel
from ness_chain.currents import zeroth_order
from ness_chain.oracle import CutoffRingingWarning, zeroth_order_time_domain

SETS = {
    "underdamped": (ChainModel(2, 10.0, 10.0, 1.0), 0.002, 100.0),
    "moderately damped": (ChainModel(2, 10.0, 10.0, 5.0), 0.002, 100.0),
    "near-critical, T_C = 0": (ChainModel(2, 10.0, 10.0, 9.5), 0.0, 200.0),
    "low temperature": (ChainModel(2, 10.0, 5.0, 1.0), 0.5, 1.0),
}


def main():
    warnings.simplefilter("ignore", CutoffRingingWarning)
    for name, (model, t_cold, t_hot) in SETS.items():
        baths = two_bath_set(model, t_cold, t_hot)
        t0 = time.perf_counter()
        td = zeroth_order_time_domain(model, baths)
        fd = zeroth_order(model, baths)
        dt = time.perf_counter() - t0
        rel = {
            q: float(np.max(np.abs(getattr(td.currents, q) - getattr(fd, q))) / np.max(np.abs(getattr(fd, q))))
            for q in ("p_inter", "p_xi", "p_gamma")
        }
        print(f"{name:24s} P_inter {fd.p_inter[1, 0]:.6e}  rel diff " +
              "  ".join(f"{k} {v:.2e}" for k, v in rel.items()) + f"  ({dt:.2f} s)")


if __name__ == "__main__":
    main()
