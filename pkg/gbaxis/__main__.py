#!/usr/bin/env python3
import os
import sys
import logging
from contextlib import contextmanager
from optparse import OptionParser, OptionGroup
import gbaxis
from gbaxis.model import GbaError
from gbaxis.core import Configuration, RunConfig, OUTPUT_DIR_ENV
from gbaxis.configparse import ConfigError
from gbaxis.scenarios import SCENARIO_NAMES, run_scenario
from gbaxis.steadystate import find_equilibrium, linearize, probe_stability
from gbaxis.frequency import bode
from gbaxis.capacity import NoiseModel, capacity_vs_stress, sweep_operating_point
from gbaxis.bifurcation import sweep
from gbaxis.plotting import emit_plot
from gbaxis.printers import write_csv, write_json, atomic_write


COMMANDS = ("simulate", "bifurcate", "linearize", "bode", "capacity", "capacity-sweep", "validate-config")


class StageError(GbaError):
    def __init__(self, stage: str, cause: GbaError):
        GbaError.__init__(self, stage + ": " + cause.message)
        self.stage = stage
        self.cause = cause


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except GbaError as exc:
        raise StageError(name, exc)


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("expected a comma-separated number list, got " + repr(text))


def _build_parser() -> OptionParser:
    parser = OptionParser(usage='usage: %prog [options] ' + '|'.join(COMMANDS),
                          version='%prog ' + gbaxis.__version__)
    cli_group = OptionGroup(parser, "CLI Options")
    cli_group.add_option('--config', metavar='F', type='string', dest='config_file',
                         help='path to a config file (.cfg text or .json)')
    cli_group.add_option('--config-generate', action='store_true', dest='config_generate',
                         help='generate a default config file', default=False)
    cli_group.add_option('-d', '--debug', action='store_true', dest='debug',
                         help='enable debugging messages', default=False)
    cli_group.add_option('-j', '--jobs', metavar='N', type='int', dest='jobs',
                         help='number of parallel workers for sweeps', default=1)
    cli_group.add_option('-o', '--output', metavar='DIR', type='string', dest='output',
                         help='output directory [$' + OUTPUT_DIR_ENV + ' or config]')
    cli_group.add_option('--plot', action='store_true', dest='plot',
                         help='also emit SVG figures', default=False)
    parser.add_option_group(cli_group)

    run_group = OptionGroup(parser, "Analysis Options")
    run_group.add_option('--scenario', metavar='NAME', type='choice', choices=list(SCENARIO_NAMES) + ["all"],
                         dest='scenario', default='healthy', help='healthy, acute, chronic or all [healthy]')
    run_group.add_option('--kleak', metavar='V', type='float', dest='kleak',
                         help='operating-point leak rate u* [analysis.u_healthy]')
    run_group.add_option('--fmin', metavar='W', type='float', dest='fmin', help='lowest frequency (rad/min)')
    run_group.add_option('--fmax', metavar='W', type='float', dest='fmax', help='highest frequency (rad/min)')
    run_group.add_option('--points', metavar='N', type='int', dest='points', help='frequency grid points')
    run_group.add_option('--noise', metavar='S', type='float', dest='noise', help='white noise PSD level')
    run_group.add_option('--power', metavar='P', type='float', dest='power', help='input power budget')
    run_group.add_option('--kleak-grid', metavar='LIST', type='string', dest='kleak_grid',
                         help='comma-separated k_leak values for capacity-sweep')
    run_group.add_option('--grid', metavar='LIST', type='string', dest='grid',
                         help='comma-separated k_leak values for bifurcate')
    run_group.add_option('--per-second', action='store_true', dest='per_second', default=False,
                         help='report capacities in bits/s instead of bits/min')
    run_group.add_option('--compare', action='store_true', dest='compare', default=False,
                         help='bode/capacity at both analysis.u_healthy and analysis.u_chronic')
    parser.add_option_group(run_group)
    return parser


class Run:
    def __init__(self, options, config: RunConfig):
        self.options = options
        self.config = config
        self.output = options.output or os.environ.get(OUTPUT_DIR_ENV) or config["output"]["directory"]
        self.formats = set(config["output"]["formats"])
        self.plot = options.plot or config["output"]["plots"]
        analysis = config["analysis"]
        self.bode_kwargs = {
            "f_min": options.fmin if options.fmin is not None else analysis["f_min"],
            "f_max": options.fmax if options.fmax is not None else analysis["f_max"],
            "points": options.points if options.points is not None else analysis["points"],
        }
        self.noise = NoiseModel(options.noise if options.noise is not None else analysis["noise_level"])
        self.power = options.power if options.power is not None else analysis["power"]
        self.kleak = options.kleak if options.kleak is not None else analysis["u_healthy"]
        self.comparison = [("healthy", analysis["u_healthy"]), ("chronic", analysis["u_chronic"])]
        self.time_scale = 1.0 / 60.0 if options.per_second else 1.0
        self.unit = "bits/s" if options.per_second else "bits/min"

    def path(self, name: str) -> str:
        return os.path.join(self.output, name)

    def echo_config(self):
        atomic_write(self.path("resolved.cfg"), self.config.to_text())

    def write(self, stem: str, table=None, summary=None, plot_kind=None, plot_data=None):
        if table is not None and "csv" in self.formats:
            write_csv(self.path(stem + ".csv"), table.columns, table.rows())
        if summary is not None and "json" in self.formats:
            write_json(self.path(stem + ".json"), summary)
        if self.plot and plot_kind:
            emit_plot(plot_data, plot_kind, self.path(stem + ".svg"))

    def operating_point(self, u_star: float):
        p, drive = self.config.parameters(), self.config.drive()
        with stage("equilibrium"):
            x_star = find_equilibrium(p, drive, u_star, cfg=self.config.integrator())
        with stage("linearize"):
            sys_ = linearize(p, x_star, u_star, drive.mean_level)
        with stage("stability probe"):
            probe_stability(sys_, p, drive, cfg=self.config.integrator())
        return sys_


def _simulate(run: Run):
    config = run.config
    names = SCENARIO_NAMES if run.options.scenario == "all" else (run.options.scenario,)
    reports = []
    for name in names:
        with stage("simulate"):
            report = run_scenario(name, config.parameters(), config.drive(),
                                  config.integrator(), config.scenario())
        run.write(report.name, report.trajectory, report, "timeseries", report.trajectory)
        print(report.name + ": period " + repr(report.cortisol_period) + " min, amplitude "
              + repr(report.cortisol_amplitude) + ", recovery " + repr(report.recovery_time))
        reports.append(report)
    if len(reports) > 1:
        run.write("scenarios", summary={r.name: r for r in reports}, plot_kind="timeseries",
                  plot_data={r.name: r.trajectory for r in reports})


def _bifurcate(run: Run):
    config = run.config
    analysis = config["analysis"]
    grid = _float_list(run.options.grid) if run.options.grid else analysis["kleak_grid"]
    with stage("bifurcate"):
        result = sweep(grid, config.parameters(), config.drive(), config.integrator(), config.scenario(),
                       analysis["healthy_fraction"], analysis["disrupted_fraction"],
                       analysis["threshold_resolution"], jobs=run.options.jobs)
    run.write("bifurcation", result, result, "bifurcation", result)
    print("threshold_1 = " + repr(result.threshold_1) + ", threshold_2 = " + repr(result.threshold_2))


def _linearize(run: Run):
    sys_ = run.operating_point(run.kleak)
    summary = sys_.to_json()
    if sys_.stable:
        summary["dc_gain"] = sys_.dc_gain()
    run.write("linearization", summary=summary)
    print("u* = " + repr(sys_.u_star) + ": stable " + repr(sys_.stable))


def _operating_points(run: Run):
    if run.options.compare:
        return run.comparison
    return [("", run.kleak)]


def _stem(base: str, label: str) -> str:
    return base + "_" + label if label else base


def _bode(run: Run):
    responses = {}
    for label, u_star in _operating_points(run):
        sys_ = run.operating_point(u_star)
        with stage("bode"):
            response = bode(sys_, **run.bode_kwargs)
        run.write(_stem("bode", label), response, response, "bode", response)
        print(_stem("bode", label) + ": dc_gain = " + repr(response.dc_gain)
              + ", omega_3db = " + repr(response.omega_3db))
        responses[label] = response
    if run.options.compare:
        run.write("bode_compare", summary=responses, plot_kind="bode", plot_data=responses)


def _capacity(run: Run):
    analysis = run.config["analysis"]
    curves = {}
    summaries = {}
    for label, u_star in _operating_points(run):
        sys_ = run.operating_point(u_star)
        with stage("capacity"):
            sweeps = sweep_operating_point(sys_, analysis["noise_sweep"], analysis["power_sweep"],
                                           run.noise, run.power, **run.bode_kwargs)
        result = sweeps.nominal
        summary = {
            "k_leak": u_star,
            "unit": run.unit,
            "capacity": result.capacity_total * run.time_scale,
            "water_level": result.mu,
            "power_used": result.power_used,
            "noise_levels": sweeps.noise_levels,
            "capacity_vs_noise": sweeps.noise_curve * run.time_scale,
            "powers": sweeps.powers,
            "capacity_vs_power": sweeps.power_curve * run.time_scale,
        }
        run.write(_stem("capacity", label), result, summary, "capacity", sweeps)
        print(_stem("capacity", label) + " = " + repr(summary["capacity"]) + " " + run.unit)
        curves[label] = sweeps
        summaries[label] = summary
    if run.options.compare:
        run.write("capacity_compare", summary=summaries, plot_kind="capacity", plot_data=curves)


class _StressTable:
    columns = ("kleak", "capacity", "stable")

    def __init__(self, points, scale):
        self.points = points
        self.scale = scale

    def rows(self):
        for point in self.points:
            capacity = None if point.capacity is None else point.capacity * self.scale
            yield [point.k_leak, capacity, point.stable]


def _capacity_sweep(run: Run):
    config = run.config
    grid = _float_list(run.options.kleak_grid) if run.options.kleak_grid else config["analysis"]["kleak_grid"]
    with stage("capacity-sweep"):
        points = capacity_vs_stress(grid, config.parameters(), config.drive(), run.noise, run.power,
                                    jobs=run.options.jobs, **run.bode_kwargs)
    table = _StressTable(points, run.time_scale)
    run.write("capacity_vs_stress", table, {"unit": run.unit, "points": [dict(zip(table.columns, row))
                                                                          for row in table.rows()]},
              "capacity", points)


_HANDLERS = {
    "simulate": _simulate,
    "bifurcate": _bifurcate,
    "linearize": _linearize,
    "bode": _bode,
    "capacity": _capacity,
    "capacity-sweep": _capacity_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        (options, args) = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors exit with 2, --help and --version with 0
        return exc.code or 0

    # generate config
    if options.config_generate:
        Configuration().generate_default('./gbaxis.cfg')
        return 0

    if len(args) != 1 or args[0] not in COMMANDS:
        parser.print_usage(sys.stderr)
        sys.stderr.write(parser.get_prog_name() + ': error: expected one command of: ' + ', '.join(COMMANDS) + '\n')
        return 2
    command = args[0]

    # handle options:
    if options.debug:
        logging.basicConfig(level=logging.DEBUG, format='%(levelname)s:\t%(message)s')
    else:
        logging.basicConfig(level=logging.WARNING, format='%(message)s')

    try:
        with stage("config"):
            config = Configuration.load(options.config_file) if options.config_file else Configuration.load_default()
        if command == "validate-config":
            sys.stdout.write(config.to_text())
            return 0
        with stage("options"):
            run = Run(options, config)
        run.echo_config()
        _HANDLERS[command](run)
    except GbaError as exc:
        sys.stderr.write(exc.message + '\n')
        return 1
    except OSError as exc:
        sys.stderr.write('io: ' + str(exc) + '\n')
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
