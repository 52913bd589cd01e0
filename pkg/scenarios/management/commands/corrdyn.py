"""
Run, check or oracle-compare a correlation-dynamics scenario.

Usage:
    python manage.py corrdyn run scenario.json --output out/
    python manage.py corrdyn check scenario.json --tol 1e-9
    python manage.py corrdyn oracle scenario.json --cutoff 3 --quiet

The command fails with exit status 1 when any invariant check fails.
"""
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from algebra.exceptions import CorrDynError
from scenarios.reports import report_json, write_report
from scenarios.runner import MODES, ScenarioRunner
from scenarios.scenario import load_scenario


class Command(BaseCommand):
    help = "Solve the correlation hierarchy for a scenario and verify its invariants"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="mode", required=True)
        for mode in MODES:
            subparser = subparsers.add_parser(mode)
            subparser.add_argument("scenario", help="Path to the scenario JSON document")
            subparser.add_argument("--tol", type=float, default=None, help="Oracle and group-law tolerance")
            subparser.add_argument("--cutoff", type=int, default=None, help="Override the particle cutoff N")
            subparser.add_argument("--output", default=None, help="Directory for report.json and CSV series")
            subparser.add_argument("--quiet", action="store_true", help="Only report failures")

    def handle(self, *args, **options):
        mode = options["mode"]
        quiet = options["quiet"]
        try:
            scenario = load_scenario(options["scenario"])
            if options["cutoff"] is not None:
                scenario = scenario.with_cutoff(options["cutoff"])
            report = ScenarioRunner(scenario, tolerance=options["tol"]).execute(mode)
        except FileNotFoundError as exc:
            raise CommandError(f"Scenario not found: {exc.filename}")
        except serializers.ValidationError as exc:
            raise CommandError(f"Invalid scenario: {exc.detail}")
        except CorrDynError as exc:
            raise CommandError(str(exc))

        if options["output"]:
            written = write_report(report, options["output"])
            if not quiet:
                self.stdout.write(f"Wrote {len(written)} files to {options['output']}")
        elif not quiet:
            self.stdout.write(report_json(report))

        if not quiet:
            for check in report.checks:
                style = self.style.SUCCESS if check.passed else self.style.ERROR
                where = "" if check.t is None else f" t={check.t:g}"
                self.stdout.write(style(f"  {check.name}{where}: {check.residual:.3e} (tol {check.tolerance:.1e})"))

        if not report.passed:
            names = sorted({check.name for check in report.failures})
            raise CommandError(f"{len(report.failures)} invariant checks failed: {', '.join(names)}", returncode=1)
        if not quiet:
            self.stdout.write(self.style.SUCCESS(f"All {len(report.checks)} checks passed"))
