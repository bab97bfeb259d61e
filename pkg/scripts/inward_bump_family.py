#!/usr/bin/env python3
"""Detection-time sweep for the inward-velocity bump family.

Runs the radial solver over a ladder of bump amplitudes and reports where
the blowup detector fires, together with the weighted inward-momentum
monitor on the steepest run.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from rswlab import diagnostics, radial
from rswlab.model import ScenarioConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--amps", type=float, nargs="+",
                    default=[1.0, 2.0, 5.0, 10.0, 20.0])
    ap.add_argument("--n", type=int, default=800)
    ap.add_argument("--horizon", type=float, default=0.15)
    ap.add_argument("--out", type=str, default="runs/inward_bump")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = []
    steepest = None
    for amp in args.amps:
        cfg = ScenarioConfig(
            kind="radial",
            initial={"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                     "u_amp": amp},
            grid={"n": args.n, "r_max": 3.0}, h_bar=1.0, horizon=args.horizon,
            store_states=True, store_every=1)
        rec = radial.run(cfg)
        entry = {"u_amp": amp, "termination": rec.termination,
                 "blowup": rec.blowup, "linf_l1_ratio": rec.profile["linf_l1_ratio"]}
        table.append(entry)
        print("amp=%-6g %s %s" % (amp, rec.termination, rec.blowup or ""))
        if rec.termination == "blowup-detected":
            steepest = (amp, rec)

    payload = {"runs": table}
    if steepest is not None:
        amp, rec = steepest
        t_det = rec.blowup["time"]
        T_vals = np.linspace(0.25 * t_det, 0.95 * t_det, 12)
        rep = diagnostics.weighted_momentum_report(rec.states, 1.0, T_vals)
        payload["monitor"] = {
            "u_amp": amp, "alpha": rep.alpha, "nu": rep.nu, "T_bar": rep.T_bar,
            "a": rep.a, "T": rep.T.tolist(), "F": rep.F.tolist(),
            "claim_ok": rep.claim_ok.tolist(),
            "monitored_ok": rep.monitored_ok.tolist(),
        }
    (out / "summary.json").write_text(json.dumps(payload, indent=2))
    print("wrote", out / "summary.json")


if __name__ == "__main__":
    main()
