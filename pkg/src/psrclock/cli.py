"""Command-line front end: validate | tune | simulate | compare | mc.

Reports go to stdout (or ``--out``); diagnostics and, without ``--out``,
the run manifest go to stderr. Exit codes: 0 ok, 1 I/O, 2 validation,
3 numerical or precondition failure.
"""

import argparse
import datetime
import hashlib
import io
import json
import sys
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

from . import __version__
from .analysis import (COMPARE_HEADER, HIST_HEADER, MC_HEADER, calibrate_sensitivity,
                       compare_architectures, comparison_records, mc_records,
                       run_monte_carlo, write_records_csv)
from .calibration import CONFIG_ENV, load_calibration
from .elements import FlipFlopKind, load_ff_table
from .engine import write_waveforms_csv
from .errors import (ConfigurationError, NetlistError, NumericalError, PreconditionError,
                     ValidationError)
from .netlist import Distribution, VariationSpec, elaborate, parse_tree_spec
from .rlc import resonant_frequency
from .skew import measure_skew
from .tuning import match_inductors, simulate_clocked, tune_network
from .units import parse_quantity

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_FREQ_STEP = 1e9
REPORT_VERSION = 1


@dataclass
class RunManifest:
    command: str
    netlist_sha256: Optional[str]
    seed: Optional[int]
    config: dict
    tool_version: str = __version__
    report_version: int = REPORT_VERSION
    timestamp: str = field(default_factory=lambda: datetime.datetime.now(
        datetime.timezone.utc).isoformat(timespec="seconds"))

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


# -- argument types --------------------------------------------------------

def quantity(text: str) -> float:
    return parse_quantity(text)


def freq_list(text: str) -> List[float]:
    """``1G,2.5G`` or ``1G..5G`` (1 GHz steps) or ``1G..5G:500meg``."""
    out: List[float] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo_s, rest = part.split("..", 1)
            hi_s, _, step_s = rest.partition(":")
            lo, hi = quantity(lo_s), quantity(hi_s)
            step = quantity(step_s) if step_s else DEFAULT_FREQ_STEP
            if step <= 0 or hi < lo:
                raise ValueError(f"bad frequency range {part!r}")
            n = int(round((hi - lo) / step))
            out.extend(lo + k * step for k in range(n + 1))
        elif part:
            out.append(quantity(part))
    if not out:
        raise ValueError("empty frequency list")
    return out


def ff_kinds(text: str) -> List[FlipFlopKind]:
    try:
        return [FlipFlopKind(k.strip().upper()) for k in text.split(",") if k.strip()]
    except ValueError:
        raise ValueError(f"unknown flip-flop kind in {text!r}") from None


def ff_kind(text: str) -> FlipFlopKind:
    kinds = ff_kinds(text)
    if len(kinds) != 1:
        raise ValueError("exactly one flip-flop kind expected")
    return kinds[0]


# -- helpers ----------------------------------------------------------------

def _read_netlist(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    spec = parse_tree_spec(raw.decode("utf-8"), source=str(path))
    return spec, hashlib.sha256(raw).hexdigest()


def _emit(args, csv_text: str, payload, manifest: RunManifest, extra=None) -> None:
    """Write the report (CSV, or JSON with --json) and its manifest."""
    body = json.dumps(payload, indent=2, sort_keys=True) + "\n" if args.json else csv_text
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
        for path, text in (extra or {}).items():
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(manifest.to_json() + "\n")
    else:
        sys.stdout.write(body)
        for text in (extra or {}).values():
            sys.stdout.write("\n" + text)
        print(manifest.to_json(), file=sys.stderr)


def _csv(records, header) -> str:
    buf = io.StringIO()
    write_records_csv(records, header, buf)
    return buf.getvalue()


def _echo(args, skip=("func", "netlist", "out", "json", "config")) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, list):
            v = [x.value if isinstance(x, FlipFlopKind) else x for x in v]
        elif isinstance(v, FlipFlopKind):
            v = v.value
        out[k] = v
    return out


# -- commands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    spec, _ = _read_netlist(args.netlist)
    cal = load_calibration(args.config)
    net = elaborate(spec, cal.unit_caps)
    print(f"{args.netlist}: ok ({len(spec.branches)} branches, "
          f"{net.total_capacitance:.6g} F total)", file=sys.stderr)
    return EXIT_OK


def cmd_tune(args) -> int:
    spec, digest = _read_netlist(args.netlist)
    cal = load_calibration(args.config)
    net = elaborate(spec, cal.unit_caps)
    clocks = args.clock or [2.0 * spec.source_freq]
    res = tune_network(net, args.f_target, refine=args.refine, budget=args.budget,
                       clock_freqs=clocks, pull_up_resistance=cal.pull_up_resistance)
    tuned = net.with_inductances(res.inductances)
    records = [{"branch": b.name, "capacitance_f": b.tank.capacitance,
                "inductance_h": b.tank.inductance,
                "f_res_hz": resonant_frequency(b.tank),
                "skew_before_s": res.skew_before, "skew_after_s": res.skew_after}
               for b in tuned.branches]
    header = ["branch", "capacitance_f", "inductance_h", "f_res_hz",
              "skew_before_s", "skew_after_s"]
    payload = {"f_target_hz": res.f_target, "f_res_spread": res.f_res_spread,
               "skew_before_s": res.skew_before, "skew_after_s": res.skew_after,
               "baseline_inductance_h": res.baseline_inductance,
               "refined": args.refine, "converged": res.converged,
               "evaluations": res.evaluations, "branches": records}
    if args.refine and not res.converged:
        print("warning: refinement budget exhausted; reporting best point found",
              file=sys.stderr)
    manifest = RunManifest("tune", digest, None, _echo(args) | {"clock": clocks,
                                                               "calibration": cal.to_dict()})
    _emit(args, _csv(records, header), payload, manifest)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec, digest = _read_netlist(args.netlist)
    cal = load_calibration(args.config)
    net = elaborate(spec, cal.unit_caps)
    if args.tune is not None:
        net = net.with_inductances(match_inductors(
            [b.tank.capacitance for b in net.branches], args.tune))
    freq = args.freq if args.freq is not None else 2.0 * spec.source_freq
    rpu = args.pull_up if args.pull_up is not None else cal.pull_up_resistance
    wf, ledger, starts = simulate_clocked(net, freq, cycles=args.cycles, dt=args.dt,
                                          pull_up_resistance=rpu,
                                          record_stride=args.stride,
                                          allow_unsafe_dt=args.unsafe_dt)
    t_last = starts[-1]
    rep = measure_skew([wf[f"{b.name}.Pclk"] for b in net.branches], 0.5 * net.vdd,
                       window=(t_last, t_last + 1.0 / freq))
    summary = {"clock_hz": freq, "skew_s": rep.skew,
               "arrivals_s": {n: t for n, t in rep.arrivals},
               "energy": {"supplied_j": ledger.supplied, "dissipated_j": ledger.dissipated,
                          "stored_j": ledger.stored,
                          "relative_closure_error": ledger.relative_closure_error}}
    print(f"skew {rep.skew:.6g} s, energy closure {ledger.relative_closure_error:.3g}",
          file=sys.stderr)
    buf = io.StringIO()
    write_waveforms_csv(wf, buf)
    payload = summary | {"waveforms": [
        {"node": w.node, "kind": w.kind, "time_s": w.times.tolist(),
         "value": w.values.tolist()} for w in wf.values()]}
    manifest = RunManifest("simulate", digest, None,
                           _echo(args) | {"freq": freq, "pull_up": rpu, "summary": summary,
                                          "calibration": cal.to_dict()})
    _emit(args, buf.getvalue(), payload, manifest)
    return EXIT_OK


def cmd_compare(args) -> int:
    spec, digest = _read_netlist(args.netlist)
    cal = load_calibration(args.config)
    models = load_ff_table(args.ff_table)
    rows = compare_architectures(spec, args.freqs, args.ff, cal, models,
                                 f_target=args.f_target, refine=not args.no_refine,
                                 cycles=args.cycles)
    records = comparison_records(rows)
    manifest = RunManifest("compare", digest, None, _echo(args) | {
        "calibration": cal.to_dict()})
    _emit(args, _csv(records, COMPARE_HEADER), {"rows": records}, manifest)
    return EXIT_OK


def cmd_mc(args) -> int:
    cal = load_calibration(args.config)
    models = load_ff_table(args.ff_table)
    model = models[args.ff]
    variation = VariationSpec(length_variation=args.variation,
                              distribution=Distribution(args.distribution),
                              samples=args.samples, seed=args.seed)
    if args.target_std is not None:
        sens = calibrate_sensitivity(model, variation, args.target_std)
    elif args.sensitivity is not None:
        sens = args.sensitivity
    else:
        sens = cal.mc_sensitivity.get(args.ff.value, 1.0)
    summary = run_monte_carlo(model, variation, sens, bins=args.bins)
    srec, hrec = mc_records(summary)
    hist_csv = _csv(hrec, HIST_HEADER)
    extra = {}
    if not args.json:
        if args.out:
            stem = args.out[:-4] if args.out.endswith(".csv") else args.out
            extra = {stem + ".hist.csv": hist_csv}
        else:
            extra = {"histogram": hist_csv}
    manifest = RunManifest("mc", None, args.seed, _echo(args) | {"sensitivity": sens})
    _emit(args, _csv(srec, MC_HEADER), {"summary": srec[0], "histogram": hrec},
          manifest, extra)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="psrclock", description=__doc__.splitlines()[0],
        epilog=f"Calibration defaults can be overridden with ${CONFIG_ENV}.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, netlist=True):
        if netlist:
            sp.add_argument("netlist", help="tree description file")
        sp.add_argument("--config", help=f"calibration JSON (default: ${CONFIG_ENV} "
                        "or packaged values)")
        sp.add_argument("--out", help="report path; manifest goes to <out>.manifest.json")
        sp.add_argument("--json", action="store_true", help="emit JSON instead of CSV")

    sp = sub.add_parser("validate", help="parse and elaborate a netlist")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("tune", help="match branch inductors to a target resonance")
    common(sp)
    sp.add_argument("--f-target", type=quantity, default=5e9, help="default 5G")
    sp.add_argument("--refine", action="store_true", help="simulation-driven refinement")
    sp.add_argument("--budget", type=int, default=50, help="evaluations per branch")
    sp.add_argument("--clock", type=freq_list, default=None,
                    help="intended Pclk rates; must not exceed the target")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("simulate", help="transient run of the clocked tree")
    common(sp)
    sp.add_argument("--freq", type=quantity, help="Pclk rate (default 2x source_freq)")
    sp.add_argument("--cycles", type=int, default=3)
    sp.add_argument("--dt", type=quantity, help="step (default t_res/200 of fastest tank)")
    sp.add_argument("--stride", type=int, default=1, help="record every Nth step")
    sp.add_argument("--tune", type=quantity, metavar="F",
                    help="match inductors at F before simulating")
    sp.add_argument("--pull-up", type=quantity, help="pull-up resistance (ohm)")
    sp.add_argument("--unsafe-dt", action="store_true", help="skip the dt ceiling check")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="conventional vs resonant power and skew")
    common(sp)
    sp.add_argument("--freqs", type=freq_list, default=freq_list("1G..5G"),
                    help="comma list or a..b[:step] (default 1G..5G)")
    sp.add_argument("--ff", type=ff_kinds, default=list(FlipFlopKind),
                    help="resonant FF kinds (default all)")
    sp.add_argument("--f-target", type=quantity, help="tuning target (default 5G)")
    sp.add_argument("--no-refine", action="store_true")
    sp.add_argument("--cycles", type=int, default=3)
    sp.add_argument("--ff-table", help="FF characterization JSON")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("mc", help="Monte-Carlo CLK-to-Q study")
    common(sp, netlist=False)
    sp.add_argument("--ff", type=ff_kind, default=FlipFlopKind.PRFF)
    sp.add_argument("--samples", type=int, default=5000)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--variation", type=float, default=0.10, help="length bound, e.g. 0.1")
    sp.add_argument("--distribution", choices=[d.value for d in Distribution],
                    default=Distribution.GAUSSIAN_TRUNCATED.value)
    sp.add_argument("--bins", type=int, default=50)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--sensitivity", type=float)
    g.add_argument("--target-std", type=quantity, help="calibrate sensitivity to this std")
    sp.add_argument("--ff-table", help="FF characterization JSON")
    sp.set_defaults(func=cmd_mc)
    return p


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except NetlistError as e:
            print(e.diagnostic(), file=sys.stderr)
            return EXIT_VALIDATION
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
        except (ValidationError, ConfigurationError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_VALIDATION
        except (PreconditionError, NumericalError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
