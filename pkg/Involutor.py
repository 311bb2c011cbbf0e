"""Involutor - fixed-point-free involutions discontinuous exactly on a prescribed set.

Usage:
  Involutor.py build   --config PATH [--steps N] [--out PATH] [--format FMT] [--log-level LEVEL]
  Involutor.py eval    --config PATH [--point P] [--steps N] [--log-level LEVEL]
  Involutor.py verify  --config PATH [--steps N] [--out PATH] [--log-level LEVEL]
  Involutor.py witness --config PATH [--steps N] [--out PATH] [--log-level LEVEL]
  Involutor.py sigma   --config PATH [--out PATH] [--log-level LEVEL]
  Involutor.py export  --config PATH [--steps N] [--out PATH] [--log-level LEVEL]
  Involutor.py (-h | --help)

Options:
  --config PATH      Run configuration (JSON or YAML).
  --steps N          Inductive steps to run (eval: step cap).
  --point P          Point to evaluate, as "p/q".
  --out PATH         Output file; defaults under volumes/exports/.
  --format FMT       jsonl | csv for build; reports are always json.
  --log-level LEVEL  DEBUG, INFO, WARNING or ERROR.
  -h --help          Show this screen.

Exit status is 0 on success, 1 when a check failed, otherwise the error's code.
"""

import json
import logging
import sys
from pathlib import Path

from docopt import docopt

from utils.analysis_utils import (ContinuityReport, compare_with_reference,
                                  continuity_report, discontinuity_certificate,
                                  property_suite, required_terms, sigma_suite,
                                  witness_sequence)
from utils.builder_utils import describe_state, evaluate, init, run
from utils.config_utils import (MODES, load_run_config, load_settings,
                                resolve_path)
from utils.csv_utils import save_export, save_plot_data, save_sigma_table
from utils.error_utils import CapExceeded, InvolutorError
from utils.exact_utils import format_rational
from utils.logging_setup import setup_logging
from utils.sigma_utils import sigma_table

EXPORT_DIR = "volumes/exports"
PASSING_VERDICTS = ("Continuous", "VacuouslyContinuous")


def _output_path(config, default_name):
    return str(resolve_path(config.output_path or f"{EXPORT_DIR}/{default_name}"))


def _write_json(config, default_name, payload):
    path = resolve_path(config.output_path or f"{EXPORT_DIR}/{default_name}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    logging.info(f"Report written to {path}")
    return path


def _built_state(config):
    state = run(init(config.builder), config.steps)
    logging.info(f"Construction ready: {describe_state(state)}")
    return state


# ! --- Subcommands ---


def cmd_build(config):
    fmt = config.output_format
    state = _built_state(config)
    print(save_export(state, fmt, _output_path(config, f"records.{fmt}")))
    return 0


def cmd_eval(config):
    print(format_rational(evaluate(config.builder, config.point, config.eval_cap)))
    return 0


def cmd_verify(config):
    state = _built_state(config)
    report = property_suite(state, config.steps)
    if state.config.F.opaque or state.config.Q.opaque:
        report.scope += "; naive reference skipped for opaque sets"
    else:
        report.checks.append(compare_with_reference(state, config.caps.oracle_depth))
    print(_write_json(config, "verify.json", report.to_dict()))
    return 0 if report.passed else 1


def cmd_witness(config):
    state = _built_state(config)
    caps = config.caps
    limit = caps.witness_points
    certificates = []
    for record in state.records[:limit]:
        try:
            certificate = discontinuity_certificate(state, record.primary, caps.certificate_samples).to_dict()
        except CapExceeded as e:
            logging.warning(f"Certificate for {format_rational(record.primary)}: {e}")
            certificate = {"x": format_rational(record.primary), "valid": False, "error": str(e)}
        certificates.append(certificate)

    reports = []
    for y in state.config.Q.prefix(limit):
        try:
            seq = witness_sequence(state, y, required_terms(window=caps.window))
            report = continuity_report(state, y, seq, window=caps.window, cap=caps.envelope_cap)
        except CapExceeded as e:
            logging.warning(f"Continuity at {format_rational(y)}: {e}")
            report = e.partial or ContinuityReport(y, None, verdict="CapExceeded")
        reports.append(report.to_dict())

    passed = (all(c["valid"] for c in certificates)
              and all(r["verdict"] in PASSING_VERDICTS for r in reports))
    payload = {"passed": passed, "certificates": certificates, "continuity": reports}
    print(_write_json(config, "witness.json", payload))
    return 0 if passed else 1


def cmd_sigma(config):
    rows = sigma_table(config.sigma, config.samples)
    table_path = save_sigma_table(rows, _output_path(config, "sigma.csv"))
    report = sigma_suite(config.sigma, config.samples)
    suite_path = Path(table_path).with_name("sigma_suite.json")
    suite_path.write_text(report.to_json() + "\n", encoding="utf-8")
    print(table_path)
    print(suite_path)
    return 0 if report.passed else 1


def cmd_export(config):
    state = _built_state(config)
    print(save_plot_data(state, _output_path(config, "plot.csv")))
    return 0


COMMANDS = {
    "build": cmd_build,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "witness": cmd_witness,
    "sigma": cmd_sigma,
    "export": cmd_export,
}


def dispatch(config):
    config.validate()
    logging.info(f"Running {config.mode}")
    return COMMANDS[config.mode](config)


def main(argv=None):
    args = docopt(__doc__, argv=argv)
    mode = next(m for m in MODES if args[m])
    settings = load_settings()
    log_settings = dict(settings.get("logging", {}))
    log_settings["file"] = str(resolve_path(log_settings.get("file", "volumes/logs/involutor.log")))
    log_config = {**settings, "logging": log_settings}
    setup_logging(log_config, level=args["--log-level"])
    try:
        config = load_run_config(args["--config"], settings=settings)
        config = config.with_overrides(mode=mode, steps=args["--steps"], point=args["--point"],
                                       out=args["--out"], fmt=args["--format"],
                                       log_level=args["--log-level"])
        if config.log_level and not args["--log-level"]:
            setup_logging(log_config, level=config.log_level)
        return dispatch(config)
    except InvolutorError as e:
        logging.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
