"""Command line entry point: ``crushbasis <subcommand> ...``.

Exit codes: 0 success, 2 data validation failure, 3 estimation failure.
Failures print one ``crushbasis: error kind=<kind>: <message>`` line on
standard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from . import data as D
from . import feedstock as F
from .errors import DataValidationError, EstimationError
from .geo import BANDS, elevators_frame, parse_band, plants_frame, read_elevators, read_plants
from .outputs import atomic_write_text, write_csv, write_manifest
from .pipeline import existing_plant_analysis, new_plant_analysis
from .simulate import Scenario, generate_basis_panel, generate_layout, oracle_frame

logger = logging.getLogger("crushbasis")

EXIT_DATA = 2
EXIT_ESTIMATION = 3


def _bands(text):
    if not text:
        return list(BANDS)
    return [parse_band(t) for t in text.split(",") if t.strip()]


def _fraction(text):
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _nonneg_float(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crushbasis", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic dataset and its oracle effects")
    p.add_argument("--config", type=Path, help="scenario key/value file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", type=Path, required=True)

    def add_inputs(p):
        p.add_argument("--plants", type=Path, required=True)
        p.add_argument("--elevators", type=Path, required=True)
        p.add_argument("--cash", type=Path, required=True)
        p.add_argument("--futures", type=Path, required=True)
        p.add_argument("--bands", default="", help="comma list such as B0_20,20-40 (default: all five)")
        p.add_argument("--completeness", type=_fraction, default=0.85)
        p.add_argument("--top-n", type=int, help="keep only the N most complete elevators")
        p.add_argument("--start", help="first date to use (YYYY-MM-DD)")
        p.add_argument("--end", help="last date to use (YYYY-MM-DD)")
        p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("estimate-new", help="DiD and SDID around new plants (tables 2-3)")
    add_inputs(p)
    p.add_argument("--zeta", type=_nonneg_float, help="unit-weight regularisation (default: data driven)")
    p.add_argument("--placebo-reps", type=_nonneg_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exclude-plant", action="append", default=[], metavar="ID")

    p = sub.add_parser("estimate-existing", help="monthly band effects around existing plants (table 4)")
    add_inputs(p)
    p.add_argument("--hac-lag", type=_nonneg_int, help="Newey-West lag (default: rule of thumb)")

    p = sub.add_parser("feedstock", help="credit and cost advantage of one feedstock over another")
    p.add_argument("--ci-a", type=float, default=F.SOYBEAN_OIL.ci_score, help="CI of feedstock a (g/MJ)")
    p.add_argument("--ci-b", type=float, default=F.YELLOW_GREASE.ci_score, help="CI of feedstock b (g/MJ)")
    p.add_argument("--price-a", type=float, default=F.SOYBEAN_OIL.price, help="$/lb")
    p.add_argument("--price-b", type=float, default=F.YELLOW_GREASE.price, help="$/lb")
    p.add_argument("--name-a", default=F.SOYBEAN_OIL.name)
    p.add_argument("--name-b", default=F.YELLOW_GREASE.name)
    p.add_argument("--credit-price", type=float, default=59.0, help="$/metric ton CO2e")
    p.add_argument("--mj-per-gallon", type=float, default=129.65)
    p.add_argument("--lbs-per-gallon", type=float, default=8.125)
    p.add_argument("--out", type=Path)
    return parser


def _config(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "verbose"}


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataValidationError(f"cannot create output directory {path}: {exc}") from None
    return path


def _load(args):
    for name in ("plants", "elevators", "cash", "futures"):
        path = getattr(args, name)
        if not path.is_file():
            raise DataValidationError(f"--{name}: no such file {path}")
    plants = read_plants(args.plants)
    elevators = read_elevators(args.elevators)
    cash = D.read_cash(args.cash)
    quotes = D.read_futures(args.futures)
    if args.start:
        cash = cash[cash["date"] >= pd.Timestamp(args.start)]
        quotes = quotes[quotes["date"] >= pd.Timestamp(args.start)]
    if args.end:
        cash = cash[cash["date"] <= pd.Timestamp(args.end)]
        quotes = quotes[quotes["date"] <= pd.Timestamp(args.end)]
    basis, info = D.prepare_daily_basis(cash, quotes, args.completeness, args.top_n)
    logger.info("basis panel: %s", info)
    inputs = {name: getattr(args, name) for name in ("plants", "elevators", "cash", "futures")}
    return plants, elevators, basis, inputs


def cmd_simulate(args) -> list[Path]:
    scenario = Scenario.from_file(args.config) if args.config else Scenario()
    if args.seed is not None:
        scenario.seed = args.seed
    out = _prepare_out(args.out)
    layout = generate_layout(scenario)
    cash, quotes = generate_basis_panel(scenario, layout)
    cash = cash.assign(date=cash["date"].dt.strftime("%Y-%m-%d"))
    quotes = quotes.assign(date=pd.to_datetime(quotes["date"]).dt.strftime("%Y-%m-%d"))
    paths = [
        write_csv(out / "plants.csv", plants_frame(layout[0])),
        write_csv(out / "elevators.csv", elevators_frame(layout[1])),
        write_csv(out / "cash.csv", cash),
        write_csv(out / "futures.csv", quotes),
        write_csv(out / "oracle.csv", oracle_frame(scenario)),
        atomic_write_text(out / "scenario.cfg", scenario.to_config()),
    ]
    inputs = {"config": args.config} if args.config else {}
    write_manifest(out, "simulate", {**_config(args), "seed": scenario.seed}, inputs, paths)
    return paths


def cmd_estimate_new(args) -> list[Path]:
    out = _prepare_out(args.out)
    plants, elevators, basis, inputs = _load(args)
    report = new_plant_analysis(
        plants,
        elevators,
        basis,
        _bands(args.bands),
        zeta=args.zeta,
        placebo_reps=args.placebo_reps,
        seed=args.seed,
        exclude=args.exclude_plant,
    )
    if report.results.empty:
        raise EstimationError("no band produced an estimate")
    paths = [
        write_csv(out / "table2.csv", report.table2),
        write_csv(out / "results.csv", report.results),
        write_csv(out / "table3.csv", report.table3),
        write_csv(out / "figure5.csv", report.figure5),
        write_csv(out / "figure6.csv", report.figure6),
    ]
    write_manifest(out, "estimate-new", _config(args), inputs, paths)
    return paths


def cmd_estimate_existing(args) -> list[Path]:
    out = _prepare_out(args.out)
    plants, elevators, basis, inputs = _load(args)
    report = existing_plant_analysis(plants, elevators, basis, _bands(args.bands), lag=args.hac_lag)
    if not report.coefficients:
        raise EstimationError("no band produced estimates")
    table4 = report.table4.reset_index()
    panels = [
        p.frame.assign(band=name, month=p.frame["month"].astype(str)) for name, p in report.panels.items()
    ]
    paths = [
        write_csv(out / "assignments.csv", report.assignments_frame()),
        write_csv(out / "basis_monthly.csv", report.monthly.to_csv_frame()),
        write_csv(out / "panel.csv", pd.concat(panels, ignore_index=True)),
        write_csv(out / "event_coefficients.csv", report.event_frame()),
        write_csv(out / "table4.csv", table4),
        write_csv(out / "figure7.csv", report.figure7),
        write_csv(out / "unidentified.csv", report.unidentified),
    ]
    write_manifest(out, "estimate-existing", _config(args), inputs, paths)
    return paths


def cmd_feedstock(args) -> list[Path]:
    a = F.FeedstockProfile(args.name_a, args.ci_a, args.price_a)
    b = F.FeedstockProfile(args.name_b, args.ci_b, args.price_b)
    k = F.FuelConstants(args.mj_per_gallon, args.lbs_per_gallon, args.credit_price)
    credit = F.lcfs_credit_breakdown(a, b, k)
    gap = F.feedstock_cost_gap(a, b, k)
    lines = [
        "credit: " + credit.line(a, b, k),
        f"cost: ({args.price_a} - {args.price_b}) $/lb x {args.lbs_per_gallon} lb/gal = ${gap:.4f}/gal",
    ]
    print("\n".join(lines))
    if args.out is None:
        return []
    out = _prepare_out(args.out)
    frame = pd.DataFrame(
        [
            {"quantity": "credit_advantage_usd_per_gal", "value": float(credit.dollars_per_gallon)},
            {"quantity": "co2e_grams_per_gal", "value": float(credit.grams_per_gallon)},
            {"quantity": "cost_gap_usd_per_gal", "value": gap},
        ]
    )
    paths = [write_csv(out / "feedstock.csv", frame)]
    write_manifest(out, "feedstock", _config(args), {}, paths)
    return paths


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate-new": cmd_estimate_new,
    "estimate-existing": cmd_estimate_existing,
    "feedstock": cmd_feedstock,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except DataValidationError as exc:
        print(f"crushbasis: error kind=data-validation: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as exc:
        print(f"crushbasis: error kind=estimation: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
