# Shnolkit experiment engine
# Dispatches experiment documents to the solve, spectrum, classify, shnol, scan, perturb and wimp commands

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

try:
    # Try relative imports first (for package usage)
    from ..coeffs.factory import CoefficientFactory
    from ..coeffs.base import CoefficientModel
    from .classify import REPORT_HEADER, HypothesisReport, hypothesis_report
    from .eigen import counting_function, eigenvalues, spectral_distance, spectrum_gaps
    from .errors import ConfigError, PositivityViolated, ShnolError
    from .operator import finite_section
    from .perturb import (COMPARISON_HEADER, PerturbationPair, PowerSequence,
                          check_theorem5_hypotheses, essential_spectrum_compare, weyl_bound)
    from .recurrence import estimate_growth, residuals, solve
    from .shnol import (CERTIFICATE_HEADER, CERTIFICATE_MARGIN, WINDOW_KINDS, difference_bound_campaign,
                        optimize_certificate, pigeonhole_certificates, shnol_bound_curve)
    from ..utils.config import ExperimentConfig, load_settings
    from ..utils.logger import setup_logger
    from ..utils.metrics import MetricsCollector
    from ..utils.pool import map_ordered
    from ..utils.reporting import ReportGenerator
except ImportError:
    # Fall back to absolute imports (for direct execution and tests)
    from coeffs.factory import CoefficientFactory
    from coeffs.base import CoefficientModel
    from core.classify import REPORT_HEADER, HypothesisReport, hypothesis_report
    from core.eigen import counting_function, eigenvalues, spectral_distance, spectrum_gaps
    from core.errors import ConfigError, PositivityViolated, ShnolError
    from core.operator import finite_section
    from core.perturb import (COMPARISON_HEADER, PerturbationPair, PowerSequence,
                              check_theorem5_hypotheses, essential_spectrum_compare, weyl_bound)
    from core.recurrence import estimate_growth, residuals, solve
    from core.shnol import (CERTIFICATE_HEADER, CERTIFICATE_MARGIN, WINDOW_KINDS, difference_bound_campaign,
                            optimize_certificate, pigeonhole_certificates, shnol_bound_curve)
    from utils.config import ExperimentConfig, load_settings
    from utils.logger import setup_logger
    from utils.metrics import MetricsCollector
    from utils.pool import map_ordered
    from utils.reporting import ReportGenerator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HYPOTHESIS = 2

SCAN_HEADER = ('lambda', 'beta_hat', 'theta_hat', 'in_E', 'dist')
SHNOL_HEADER = CERTIFICATE_HEADER + ('beta_hat', 'bound_shape')
PIGEONHOLE_HEADER = ('lambda', 'r', 'bound', 'residual_norm_sq', 'budget')
SOLUTION_HEADER = ('n', 'mantissa', 'log_scale', 'log_abs_y')
SPECTRUM_HEADER = ('k', 'lambda_k')
SECTION_HEADER = ('n', 'diag', 'offdiag')
# randomized difference-bound trials run once the ratio hypothesis holds
CAMPAIGN_TRIALS = 1000

WIMP_DEFAULTS = {
    'lambda_grid': [round(-3.0 + 0.25 * k, 12) for k in range(25)],
    'N': 20000,
    'spectrum_window': [0.0, 3.0],
    'r_grid': [1000, 3000, 10000, 30000, 100000],
    'kinds': ['linear_taper', 'cosine_taper'],
}


@dataclass
class RunResult:
    """Outcome of one command run"""
    command: str
    exit_code: int
    files: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class LambdaOutcome:
    """Per-lambda task result; error is set instead of rows when the task failed"""
    lam: float
    rows: Tuple = ()
    extra: Tuple = ()
    error: Optional[str] = None


def _scan_task(args) -> LambdaOutcome:
    model, lam, form, N, window, rescale_period, beta_probe = args
    try:
        sol = solve(model, lam, form, N, rescale_period)
        growth = estimate_growth(sol, window, beta_probe)
    except ShnolError as e:
        return LambdaOutcome(lam, error=str(e))
    return LambdaOutcome(lam, rows=((growth.beta_hat, growth.theta_hat, growth.theta_rms),))


def _certificate_task(args) -> LambdaOutcome:
    model, lam, form, N, window, search, threshold, rescale_period = args
    try:
        sol = solve(model, lam, form, N, rescale_period)
        growth = estimate_growth(sol, window)
        cert = optimize_certificate(model, lam, sol, search['r_grid'], search['kinds'],
                                    search.get('n0'), search['widths'], threshold)
        extra = ()
        if search.get('delta1') is not None:
            found = pigeonhole_certificates(model, lam, sol, growth.beta_hat, search['delta1'],
                                            search.get('r_min', sol.start_index + 2),
                                            search.get('limit', 8), search.get('n0'))
            extra = tuple((lam, p.r, p.certificate.bound,
                           (p.certificate.residual_norm / p.certificate.w_norm) ** 2, p.budget)
                          for p in found)
    except ShnolError as e:
        return LambdaOutcome(lam, error=str(e))
    shape = shnol_bound_curve([growth.beta_hat])[0]
    return LambdaOutcome(lam, rows=(cert.row() + (growth.beta_hat, shape),), extra=extra)


class ShnolKit:
    """Experiment engine: tool-wide settings plus one command per experiment document"""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path
        self.settings = load_settings(config_path)
        self.logger = setup_logger(self.settings['log_level'])
        self.metrics = MetricsCollector()

    # ---- helpers

    def _model(self, experiment: ExperimentConfig) -> CoefficientModel:
        spec = experiment.model or {'family': 'wimp'}
        return CoefficientFactory.from_spec(spec)

    @staticmethod
    def _require(value: Any, key: str, command: str) -> Any:
        if value is None or value == []:
            raise ConfigError(f"Command '{command}' needs '{key}'", key=key)
        return value

    @staticmethod
    def _grid(experiment: ExperimentConfig) -> List[float]:
        if experiment.lambda_grid:
            return list(experiment.lambda_grid)
        if experiment.lam is not None:
            return [experiment.lam]
        return []

    @staticmethod
    def _fit_window(experiment: ExperimentConfig, model: CoefficientModel, N: int) -> Tuple[int, int]:
        if experiment.window is not None:
            return tuple(experiment.window)
        start = model.start_index
        return start + N // 2, start + N

    def _thresholds(self, experiment: ExperimentConfig, keys: Sequence[str]) -> Dict[str, float]:
        return {key: experiment.threshold(key, self.settings) for key in keys}

    def _fail_outcome(self, sink, outcome: LambdaOutcome, outcomes: Sequence[LambdaOutcome]) -> None:
        """Flush what was written, account every failed lambda and raise for the first"""
        sink.flush()
        self.metrics.record_rows(0, failed=sum(1 for o in outcomes if o.error is not None))
        raise ShnolError(f"lambda={outcome.lam}: {outcome.error}")

    def _write_outcomes(self, sink, outcomes: Sequence[LambdaOutcome]) -> List[LambdaOutcome]:
        """Write rows in grid order up to the first failed lambda, then raise"""
        done = []
        for outcome in outcomes:
            if outcome.error is not None:
                self._fail_outcome(sink, outcome, outcomes)
            for row in outcome.rows:
                sink.write(row)
                self.metrics.record_rows(1)
            done.append(outcome)
        return done

    # ---- commands

    def run_solve(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        model = self._model(experiment)
        lam = self._require(experiment.lam, 'lambda', 'solve')
        N = self._require(experiment.N, 'N', 'solve')
        sol = solve(model, lam, experiment.form, N, self.settings['rescale_period'])
        rows = list(sol.rows())
        path = report.write_csv('solve', SOLUTION_HEADER, rows)
        self.metrics.record_rows(len(rows))

        summary = {'end_index': sol.end_index, 'max_relative_residual': float(residuals(sol, model).max())}
        window = self._fit_window(experiment, model, N)
        try:
            growth = estimate_growth(sol, window)
            summary.update(beta_hat=growth.beta_hat, theta_hat=growth.theta_hat,
                           preferred=growth.preferred, fit_window=list(growth.fit_window))
        except ShnolError as e:
            self.logger.warning(f"Growth fit skipped: {e}")
        return RunResult('solve', EXIT_OK, [str(path)], summary)

    def run_spectrum(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        model = self._model(experiment)
        N = self._require(experiment.N, 'N', 'spectrum')
        sec = finite_section(model, N, experiment.form)
        window = tuple(experiment.spectrum_window) if experiment.spectrum_window else None
        spec = eigenvalues(sec, experiment.tol, window, threads)

        files = [str(report.write_csv('spectrum', SPECTRUM_HEADER, spec.rows())),
                 str(report.write_csv('spectrum_section', SECTION_HEADER, sec.rows()))]
        self.metrics.record_rows(len(spec))
        summary = {'N': N, 'count': len(spec), 'tol': spec.tol, 'gershgorin': list(sec.gershgorin())}
        if window is not None:
            summary['max_gap'] = spectrum_gaps(spec, window)
        return RunResult('spectrum', EXIT_OK, files, summary)

    def run_classify(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        model = self._model(experiment)
        N = self._require(experiment.N, 'N', 'classify')
        t = self._thresholds(experiment, ('c1_cap', 'min_sum', 'min_decade_increase'))
        result = hypothesis_report(model, experiment.n0, N, t['c1_cap'], t['min_sum'], t['min_decade_increase'])
        text, campaign = self._campaign(experiment, model, result)

        files = [str(report.write_csv('classify', REPORT_HEADER, [result.row()])),
                 str(report.write_text('classify', text))]
        self.metrics.record_rows(1)
        if not result.C1_ok:
            self.logger.warning(f"C1 hypothesis fails first at n = {result.first_violation}")
        summary = {'eligible': result.eligible, 'C1_hat': result.C1_hat, 'gamma_hat': result.gamma_hat,
                   'limit_point': result.limit_point}
        summary.update(campaign)
        ok = result.eligible and not campaign.get('campaign_violations')
        return RunResult('classify', EXIT_OK if ok else EXIT_HYPOTHESIS, files, summary)

    def _campaign(self, experiment: ExperimentConfig, model: CoefficientModel,
                  result: HypothesisReport) -> Tuple[str, Dict[str, Any]]:
        """Seeded difference-bound trials on the tested range when C1 holds there"""
        if not result.C1_ok:
            return result.to_text(), {}
        campaign = difference_bound_campaign(model, result.C1_hat, result.n0, result.tested_range[1],
                                             CAMPAIGN_TRIALS, experiment.seed)
        if not campaign.holds:
            self.logger.warning(f"Difference bound fails in {campaign.violations} of {campaign.trials} trials")
        summary = {'campaign_seed': campaign.seed, 'campaign_violations': campaign.violations,
                   'campaign_worst_ratio': campaign.worst_ratio}
        return result.to_text() + campaign.to_text(), summary

    def _search(self, experiment: ExperimentConfig, defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        defaults = defaults or {}
        search = dict(experiment.search)
        search.setdefault('r_grid', defaults.get('r_grid'))
        search.setdefault('kinds', defaults.get('kinds', list(WINDOW_KINDS)))
        search.setdefault('widths', list(self.settings['certificate']['widths']))
        self._require(search['r_grid'], 'search.r_grid', experiment.command)
        return search

    def _certificates(self, name: str, experiment: ExperimentConfig, model: CoefficientModel,
                      grid: List[float], search: Dict[str, Any], report: ReportGenerator,
                      threads: int, N: Optional[int] = None) -> Tuple[List[str], Dict[str, Any]]:
        N = max(N or 0, max(search['r_grid']) + CERTIFICATE_MARGIN - model.start_index)
        window = self._fit_window(experiment, model, N)
        threshold = experiment.threshold('certificate', self.settings)
        tasks = [(model, lam, experiment.form, N, window, search, threshold, self.settings['rescale_period'])
                 for lam in grid]
        self.logger.info(f"Optimizing certificates for {len(grid)} lambda values, N={N}")
        outcomes = map_ordered(_certificate_task, tasks, threads)

        files = []
        with report.open_csv(name, SHNOL_HEADER) as sink:
            files.append(str(sink.path))
            done = self._write_outcomes(sink, outcomes)
        bounds = [outcome.rows[0][7] for outcome in done]
        summary = {'max_bound': max(bounds), 'solution_N': N}
        if search.get('delta1') is not None:
            extra = [row for outcome in done for row in outcome.extra]
            files.append(str(report.write_csv(f"{name}_pigeonhole", PIGEONHOLE_HEADER, extra)))
            summary['pigeonhole_rows'] = len(extra)
        return files, summary

    def run_shnol(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        model = self._model(experiment)
        grid = self._require(self._grid(experiment), 'lambda_grid', 'shnol')
        files, summary = self._certificates('shnol', experiment, model, grid, self._search(experiment),
                                            report, threads, experiment.N)
        return RunResult('shnol', EXIT_OK, files, summary)

    def run_scan(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        """Classify each grid lambda into the polynomially-bounded set and measure its spectral distance"""
        model = self._model(experiment)
        grid = self._require(self._grid(experiment), 'lambda_grid', 'scan')
        N = self._require(experiment.N, 'N', 'scan')
        t = self._thresholds(experiment, ('residual_rms', 'beta_cut'))
        window = self._fit_window(experiment, model, N)

        spec = eigenvalues(finite_section(model, N, experiment.form), experiment.tol, workers=threads)
        tasks = [(model, lam, experiment.form, N, window, self.settings['rescale_period'], 1e-3) for lam in grid]
        outcomes = map_ordered(_scan_task, tasks, threads)

        in_E_dist = []
        rows = 0
        with report.open_csv('scan', SCAN_HEADER) as sink:
            path = str(sink.path)
            for outcome in outcomes:
                if outcome.error is not None:
                    self._fail_outcome(sink, outcome, outcomes)
                beta_hat, theta_hat, theta_rms = outcome.rows[0]
                in_E = theta_rms <= t['residual_rms'] and beta_hat <= t['beta_cut']
                dist = spectral_distance(spec, outcome.lam)
                if in_E:
                    in_E_dist.append(dist)
                sink.write((outcome.lam, beta_hat, theta_hat, int(in_E), dist))
                self.metrics.record_rows(1)
                rows += 1

        summary = {
            'rows': rows,
            'in_E': len(in_E_dist),
            'max_dist_in_E': max(in_E_dist) if in_E_dist else None,
            'eigenvalues_below_max_lambda': counting_function(spec, max(grid)),
        }
        self.logger.info(f"Scan summary: max dist over E-hat = {summary['max_dist_in_E']}")
        return RunResult('scan', EXIT_OK, [path], summary)

    def run_perturb(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        model = self._model(experiment)
        N_list = self._require(experiment.N_list, 'N_list', 'perturb')
        window = self._require(experiment.spectrum_window, 'spectrum_window', 'perturb')
        spec = experiment.perturbation
        pair = PerturbationPair(model, PowerSequence.from_dict(spec.get('eta', 0.0)),
                                PowerSequence.from_dict(spec.get('psi', 0.0)), float(spec.get('alpha', 1.0)))

        N = experiment.N or max(N_list)
        try:
            verdict = check_theorem5_hypotheses(pair, N)
        except PositivityViolated as e:
            self.logger.warning(f"Perturbed off-diagonal not positive: {e}")
            path = report.write_text('perturb', f"positive=false\nfirst_violation={e.index}\nsatisfied=false\n")
            return RunResult('perturb', EXIT_HYPOTHESIS, [str(path)], {'satisfied': False})

        rows = essential_spectrum_compare(pair, N_list, tuple(window), experiment.tol, threads)
        files = [str(report.write_csv('perturb', COMPARISON_HEADER, [row.row() for row in rows])),
                 str(report.write_text('perturb', verdict.to_text()))]
        self.metrics.record_rows(len(rows))
        summary = {
            'satisfied': verdict.satisfied,
            'hausdorff': [row.hausdorff for row in rows],
            'weyl_bound_at_max_N': weyl_bound(pair, max(N_list)),
        }
        code = EXIT_OK if verdict.satisfied else EXIT_HYPOTHESIS
        return RunResult('perturb', code, files, summary)

    def run_wimp(self, experiment: ExperimentConfig, report: ReportGenerator, threads: int) -> RunResult:
        """Hypothesis report, section spectrum and tapered certificates for the weighted example"""
        model = self._model(experiment)
        grid = self._grid(experiment) or list(WIMP_DEFAULTS['lambda_grid'])
        search = self._search(experiment, WIMP_DEFAULTS)
        N = experiment.N or WIMP_DEFAULTS['N']
        window = tuple(experiment.spectrum_window or WIMP_DEFAULTS['spectrum_window'])
        t = self._thresholds(experiment, ('c1_cap', 'min_sum', 'min_decade_increase'))

        hypotheses = hypothesis_report(model, experiment.n0, max(search['r_grid']),
                                       t['c1_cap'], t['min_sum'], t['min_decade_increase'])
        text, campaign = self._campaign(experiment, model, hypotheses)
        files = [str(report.write_csv('wimp_hypotheses', REPORT_HEADER, [hypotheses.row()])),
                 str(report.write_text('wimp_hypotheses', text))]

        spec = eigenvalues(finite_section(model, N, experiment.form), experiment.tol, window, threads)
        files.append(str(report.write_csv('wimp_spectrum', SPECTRUM_HEADER, spec.rows())))

        cert_files, summary = self._certificates('wimp', experiment, model, grid, search,
                                                 report, threads)
        files = cert_files + files
        summary.update(eligible=hypotheses.eligible, max_gap=spectrum_gaps(spec, window), section_N=N)
        summary.update(campaign)
        ok = hypotheses.eligible and not campaign.get('campaign_violations')
        code = EXIT_OK if ok else EXIT_HYPOTHESIS
        return RunResult('wimp', code, files, summary)

    # ---- dispatch

    def run(self, experiment: ExperimentConfig, output_dir: Optional[str] = None,
            threads: Optional[int] = None) -> RunResult:
        """Run the command named by the experiment; writes <out>/<command>.csv and .meta"""
        out = output_dir or experiment.output or self.settings['output_dir']
        threads = int(threads or experiment.threads or self.settings['threads'])
        report = ReportGenerator(out)
        handler = getattr(self, f"run_{experiment.command}")

        self.logger.info(f"Running {experiment.command} -> {Path(out)} with {threads} worker(s)")
        self.metrics.start_stage()
        try:
            result = handler(experiment, report, threads)
        finally:
            self.metrics.end_stage(experiment.command)

        thresholds = self._thresholds(experiment, ('residual_rms', 'beta_cut', 'certificate', 'c1_cap',
                                                   'min_sum', 'min_decade_increase'))
        meta = report.write_meta(experiment.command, experiment.to_dict(), result.summary, thresholds)
        result.files.append(str(meta))

        stats = self.metrics.get_summary_stats()
        self.logger.info(f"{experiment.command} finished with exit code {result.exit_code}: "
                         f"wall {stats['wall_time']:.2f}s, cpu {stats['cpu_time']:.2f}s, "
                         f"peak RSS {stats['peak_rss_mb']:.1f} MB")
        return result
