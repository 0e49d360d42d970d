"""
Command line entry point.

    polytope-em <subcommand> [flags]

Results go to stdout (or --out), diagnostics to stderr. Exit status is 0 on
success, 2 on usage errors and invalid input, 3 on numeric failures.
"""
import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from polytope_em.bernoulli.bernoulli_1d import periodized_eval
from polytope_em.bernoulli.multivariate_bernoulli import BACKENDS, MvBernoulli
from polytope_em.expansion.euler_maclaurin import expand_main, gamma_coefficients_complex
from polytope_em.expansion.fourier_simplex import cone_of, expand_general, oracle_ft
from polytope_em.fields.scalar_field import ScalarField
from polytope_em.geometry.basis_families import build_family
from polytope_em.geometry.lattice_geometry import load_complex, solid_angle, weighted_lattice_count
from polytope_em.geometry.solid_angles import parse_method
from polytope_em.quadrature.extrapolation import CSV_COLUMNS, convergence_table, extrapolated_integral
from polytope_em.utils.reduction import resolve_threads

logger = logging.getLogger(__name__)

FORMATS = ('json', 'csv', 'text')
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    options: Dict[str, object] = field(default_factory=dict)
    threads: int = 1
    seed: int = 0
    tol: Optional[float] = None
    format: Optional[str] = None
    out: Optional[str] = None
    log_level: str = 'WARNING'

    def as_dict(self) -> dict:
        return {
            'subcommand': self.subcommand,
            **{k: _jsonable(v) for k, v in sorted(self.options.items())},
            'threads': self.threads,
            'seed': self.seed,
            'tol': self.tol,
            'format': self.format,
            'out': self.out,
        }


@dataclass
class CommandOutput:
    """ A scalar, a record, or a table; default_format applies without --format """
    default_format: str
    value: Optional[float] = None
    record: Optional[dict] = None
    columns: Sequence[str] = ()
    rows: List[tuple] = field(default_factory=list)


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def format_float(value: float) -> str:
    """ 17 significant digits, always with a decimal point or exponent """
    text = format(float(value), '.17g')
    if text.lstrip('-').isdigit():
        text += '.0'
    return text


def csv_fractions(text: str) -> List[Fraction]:
    try:
        return [Fraction(v.strip()) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def csv_ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'")


def fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got '{text}'")


def _field(config: RunConfig, d: int) -> ScalarField:
    return ScalarField.parse(config.options['f'], d)


def _method(config: RunConfig):
    return parse_method(config.options.get('method', 'exact'), seed=config.seed)


def run_bernoulli(config: RunConfig) -> CommandOutput:
    return CommandOutput('text', value=periodized_eval(config.options['n'], config.options['x']))


def run_bases(config: RunConfig) -> CommandOutput:
    family = build_family(config.options['d'])
    listing = [{'V': list(V), 'basis': [list(b) for b in family.basis(V)], 'lambda': list(family.lam(V))}
               for V in family.indices()]
    return CommandOutput('json', record={'d': family.d, 'bases': listing})


def run_solid_angle(config: RunConfig) -> CommandOutput:
    P = load_complex(config.options['complex'])
    return CommandOutput('text', value=solid_angle(P, config.options['point'], _method(config)))


def run_count(config: RunConfig) -> CommandOutput:
    P = load_complex(config.options['complex'])
    return CommandOutput('text', value=weighted_lattice_count(P, config.options['tau'], _method(config)))


def run_mvb(config: RunConfig) -> CommandOutput:
    J = config.options['J']
    flat = config.options['L']
    d = len(J)
    if len(flat) != d * d:
        raise ValueError(f"--L needs {d * d} entries for J of length {d}, got {len(flat)}")
    L = [flat[r * d:(r + 1) * d] for r in range(d)]
    backend = config.options['backend']
    kwargs = {'epsilon': config.options['epsilon']} if backend == 'fourier' else {}
    return CommandOutput('text', value=MvBernoulli(J, L).evaluate(config.options['x'], backend, **kwargs))


def _single_simplex(config: RunConfig):
    P = load_complex(config.options['simplex'])
    if len(P.simplices) != 1:
        raise ValueError(f"{config.options['simplex']} holds {len(P.simplices)} simplices, expected one")
    return P.simplices[0]


def run_ft_expand(config: RunConfig) -> CommandOutput:
    simplex = _single_simplex(config)
    q = _field(config, simplex.d)
    tau, xi, w = config.options['tau'], config.options['xi'], config.options['w']
    expansion = expand_general(simplex, q, tau, cone_of(simplex, xi), w, config.tol, config.threads)
    value = expansion.evaluate(xi)
    oracle = oracle_ft(simplex, q, tau, xi, tol=config.tol or 1e-10)
    return CommandOutput('json', record={
        'expansion': [value.real, value.imag],
        'oracle': [oracle.real, oracle.imag],
        'abs_error': abs(value - oracle),
        'terms': len(expansion.terms),
    })


def run_expand(config: RunConfig) -> CommandOutput:
    simplex = _single_simplex(config)
    q = _field(config, simplex.d)
    report = expand_main(simplex, q, config.options['tau'], config.options['x'], config.options['w'],
                         _method(config), config.options['backend'], config.tol, config.threads)
    return CommandOutput('json', record=report.as_dict())


def run_gamma(config: RunConfig) -> CommandOutput:
    P = load_complex(config.options['complex'])
    gammas = gamma_coefficients_complex(P, _field(config, P.d), config.options['w'], config.options['backend'],
                                        config.tol, config.threads)
    return CommandOutput('csv', columns=('k', 'gamma_k'), rows=[(k, g) for k, g in enumerate(gammas, start=1)])


def run_quad(config: RunConfig) -> CommandOutput:
    P = load_complex(config.options['complex'])
    value = extrapolated_integral(P, _field(config, P.d), config.options['N'], config.options['w'], _method(config),
                                  config.threads)
    return CommandOutput('text', value=value)


def run_table(config: RunConfig) -> CommandOutput:
    P = load_complex(config.options['complex'])
    reference = config.options.get('reference')
    rows = convergence_table(P, _field(config, P.d), config.options['Ns'], config.options['w'],
                             float(reference) if reference is not None else None, _method(config), config.threads)
    return CommandOutput('csv', columns=CSV_COLUMNS, rows=[r.as_tuple() for r in rows])


COMMANDS: Dict[str, Callable[[RunConfig], CommandOutput]] = {
    'bernoulli': run_bernoulli,
    'bases': run_bases,
    'solid-angle': run_solid_angle,
    'count': run_count,
    'mvb': run_mvb,
    'ft-expand': run_ft_expand,
    'expand': run_expand,
    'gamma': run_gamma,
    'quad': run_quad,
    'table': run_table,
}

GLOBAL_FLAGS = ('threads', 'seed', 'tol', 'format', 'out', 'log_level', 'subcommand')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--threads', type=int, default=None,
                        help='Worker threads (default: available parallelism; SM_THREADS overrides)')
    common.add_argument('--seed', type=int, default=0, help='Seed for Monte Carlo solid angles given as mc:<samples>')
    common.add_argument('--tol', type=float, default=None, help='Quadrature tolerance override')
    common.add_argument('--format', choices=FORMATS, default=None, help='Output format')
    common.add_argument('--out', default=None, help='Output path (default: stdout)')
    common.add_argument('--log-level', default='WARNING', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    parser = argparse.ArgumentParser(prog='polytope-em', description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest='subcommand', required=True)

    p = sub.add_parser('bernoulli', parents=[common], help='Periodized Bernoulli polynomial B_n(x)')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--x', type=fraction, required=True)

    p = sub.add_parser('bases', parents=[common], help='Basis family listing')
    p.add_argument('--d', type=int, required=True)

    p = sub.add_parser('solid-angle', parents=[common], help='Normalized solid angle of a complex at a point')
    p.add_argument('--complex', required=True)
    p.add_argument('--point', type=csv_fractions, required=True)
    p.add_argument('--method', default='exact')

    p = sub.add_parser('count', parents=[common], help='Weighted lattice point count of tau P')
    p.add_argument('--complex', required=True)
    p.add_argument('--tau', type=fraction, required=True)
    p.add_argument('--method', default='exact')

    p = sub.add_parser('mvb', parents=[common], help='Multivariate periodized Bernoulli polynomial')
    p.add_argument('--J', type=csv_ints, required=True)
    p.add_argument('--L', type=csv_ints, required=True, help='Row-major integer matrix')
    p.add_argument('--x', type=csv_fractions, required=True)
    p.add_argument('--backend', choices=BACKENDS, default='hnf')
    p.add_argument('--epsilon', type=float, default=1e-3, help='Mollifier width of the fourier backend')

    p = sub.add_parser('ft-expand', parents=[common], help='Fourier transform expansion against direct quadrature')
    p.add_argument('--simplex', required=True)
    p.add_argument('--f', required=True)
    p.add_argument('--tau', type=fraction, required=True)
    p.add_argument('--xi', type=csv_fractions, required=True)
    p.add_argument('--w', type=int, required=True)

    p = sub.add_parser('expand', parents=[common], help='Euler-MacLaurin expansion of a weighted lattice sum')
    p.add_argument('--simplex', required=True)
    p.add_argument('--f', required=True)
    p.add_argument('--tau', type=fraction, required=True)
    p.add_argument('--x', type=csv_fractions, required=True)
    p.add_argument('--w', type=int, required=True)
    p.add_argument('--method', default='exact')
    p.add_argument('--backend', choices=BACKENDS, default='hnf')

    p = sub.add_parser('gamma', parents=[common], help='Coefficients of the N^{-2k} terms of S_N')
    p.add_argument('--complex', required=True)
    p.add_argument('--f', required=True)
    p.add_argument('--w', type=int, required=True)
    p.add_argument('--backend', choices=BACKENDS, default='hnf')

    p = sub.add_parser('quad', parents=[common], help='Extrapolated weighted Riemann sum')
    p.add_argument('--complex', required=True)
    p.add_argument('--f', required=True)
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--w', type=int, required=True)
    p.add_argument('--method', default='exact')

    p = sub.add_parser('table', parents=[common], help='Convergence table')
    p.add_argument('--complex', required=True)
    p.add_argument('--f', required=True)
    p.add_argument('--Ns', type=csv_ints, required=True)
    p.add_argument('--w', type=int, required=True)
    p.add_argument('--reference', type=fraction, default=None)
    p.add_argument('--method', default='exact')
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    options = {k: v for k, v in vars(args).items() if k not in GLOBAL_FLAGS}
    return RunConfig(subcommand=args.subcommand, options=options, threads=resolve_threads(args.threads),
                     seed=args.seed, tol=args.tol, format=args.format, out=args.out, log_level=args.log_level)


def render(config: RunConfig, output: CommandOutput) -> str:
    fmt = config.format or output.default_format
    if fmt == 'json':
        if output.record is not None:
            result = output.record
        elif output.rows:
            result = [dict(zip(output.columns, row)) for row in output.rows]
        else:
            result = output.value
        return json.dumps({'config': config.as_dict(), 'result': result}, indent=2) + '\n'
    if fmt == 'csv':
        buffer = io.StringIO()
        buffer.write(f"# config: {json.dumps(config.as_dict(), sort_keys=True)}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        if output.rows or output.columns:
            writer.writerow(output.columns)
            writer.writerows([[format_float(v) if isinstance(v, float) else v for v in row] for row in output.rows])
        elif output.record is not None:
            writer.writerow(['key', 'value'])
            writer.writerows([[k, v] for k, v in output.record.items() if not isinstance(v, (list, dict))])
        else:
            writer.writerow(['value'])
            writer.writerow([format_float(output.value)])
        return buffer.getvalue()
    logger.info(f"config: {config.as_dict()}")
    if output.value is not None:
        return format_float(output.value) + '\n'
    if output.record is not None:
        return json.dumps(output.record, indent=2) + '\n'
    return '\n'.join(','.join(format_float(v) if isinstance(v, float) else str(v) for v in row)
                     for row in [tuple(output.columns)] + output.rows) + '\n'


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=config.log_level, stream=sys.stderr,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        output = COMMANDS[config.subcommand](config)
        text = render(config, output)
    except ArithmeticError as e:
        print(f"polytope-em: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        print(f"polytope-em: {e}", file=sys.stderr)
        return EXIT_USAGE
    if config.out:
        with open(config.out, 'w', newline='') as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
