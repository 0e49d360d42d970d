import io
import json
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from unittest import TestCase
from unittest.mock import patch

from parameterized import parameterized

from data import DATA_DIR
from polytope_em.cli import EXIT_OK, EXIT_USAGE, format_float, main, parse_args
from polytope_em.utils.reduction import THREADS_ENV_VAR


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with patch.dict(os.environ, {THREADS_ENV_VAR: ''}), redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def fixture(name: str) -> str:
    return os.path.join(DATA_DIR, name)


class TestFormatFloat(TestCase):

    @parameterized.expand([
        (1.0, '1.0'),
        (-2.0, '-2.0'),
        (0.25, '0.25'),
        (1e20, '1e+20'),
    ])
    def test_format(self, value, expected):
        self.assertEqual(format_float(value), expected)


class TestCommands(TestCase):

    def test_bernoulli(self):
        code, out, _ = run('bernoulli', '--n', '2', '--x', '0')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(out.startswith('0.0833333'))

    def test_bases(self):
        code, out, _ = run('bases', '--d', '2')
        self.assertEqual(code, EXIT_OK)
        result = json.loads(out)['result']
        self.assertEqual(result['d'], 2)
        self.assertEqual(len(result['bases']), 4)

    def test_solid_angle(self):
        code, out, _ = run('solid-angle', '--complex', fixture('standard_triangle.json'), '--point', '0,0')
        self.assertEqual((code, out), (EXIT_OK, '0.25\n'))

    def test_mvb(self):
        code, out, _ = run('mvb', '--J', '1,0', '--L', '1,0,0,1', '--x', '1/4,9/10')
        self.assertEqual((code, out), (EXIT_OK, '-0.25\n'))

    def test_quad_constant(self):
        code, out, _ = run('quad', '--complex', fixture('unit_square.json'), '--f', '1', '--N', '2', '--w', '1')
        self.assertEqual((code, out), (EXIT_OK, '1.0\n'))

    def test_gamma_csv(self):
        code, out, _ = run('gamma', '--complex', fixture('unit_interval.json'), '--f', 'x1^2', '--w', '2')
        self.assertEqual(code, EXIT_OK)
        lines = out.splitlines()
        self.assertTrue(lines[0].startswith('# config: '))
        self.assertEqual(json.loads(lines[0][len('# config: '):])['subcommand'], 'gamma')
        self.assertEqual(lines[1], 'k,gamma_k')
        self.assertTrue(lines[2].startswith('1,0.16666666666'))

    def test_expand_json(self):
        code, out, _ = run('expand', '--simplex', fixture('standard_triangle.json'), '--f', '1', '--tau', '2',
                           '--x', '0,0', '--w', '2')
        self.assertEqual(code, EXIT_OK)
        document = json.loads(out)
        self.assertEqual(document['config']['tau'], '2')
        self.assertAlmostEqual(document['result']['lhs_bruteforce'], 2.0, places=13)

    def test_out_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'value.json')
            code, out, _ = run('bernoulli', '--n', '1', '--x', '1/4', '--format', 'json', '--out', path)
            self.assertEqual((code, out), (EXIT_OK, ''))
            with open(path) as f:
                self.assertEqual(json.load(f)['result'], -0.25)

    def test_deterministic_across_threads(self):
        argv = ('quad', '--complex', fixture('standard_triangle.json'), '--f', 'exp(x1 + x2)', '--N', '4', '--w', '4')
        _, single, _ = run(*argv, '--threads', '1')
        _, pooled, _ = run(*argv, '--threads', '3')
        self.assertEqual(single, pooled)


class TestExitCodes(TestCase):

    def test_missing_flag(self):
        code, _, err = run('quad', '--complex', fixture('unit_square.json'), '--f', '1', '--N', '2')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn('--w', err)

    def test_missing_file(self):
        code, _, err = run('count', '--complex', 'no_such_complex.json', '--tau', '2')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn('polytope-em', err)

    @parameterized.expand([
        ('missing_edges', {'d': 2, 'simplices': [{'p': [0, 0]}]}),
        ('ragged_edges', {'d': 2, 'simplices': [{'p': [0, 0], 'M': [[1, 0], [0]]}]}),
        ('missing_base_point', {'M': [[1]]}),
    ])
    def test_malformed_complex(self, _, data):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'complex.json')
            with open(path, 'w') as f:
                json.dump(data, f)
            code, out, err = run('count', '--complex', path, '--tau', '2')
        self.assertEqual(code, EXIT_USAGE)
        self.assertEqual(out, '')
        self.assertIn('polytope-em', err)
        self.assertNotIn('Traceback', err)

    def test_bad_matrix(self):
        code, _, _ = run('mvb', '--J', '1,0', '--L', '1,0,0', '--x', '0,0')
        self.assertEqual(code, EXIT_USAGE)

    def test_bad_expression(self):
        code, _, _ = run('quad', '--complex', fixture('unit_square.json'), '--f', 'x1 +', '--N', '2', '--w', '1')
        self.assertEqual(code, EXIT_USAGE)


class TestRunConfig(TestCase):

    def test_options(self):
        with patch.dict(os.environ, {THREADS_ENV_VAR: '2'}):
            config = parse_args(['count', '--complex', 'c.json', '--tau', '3/2', '--seed', '7'])
        self.assertEqual(config.threads, 2)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.as_dict()['tau'], '3/2')
        self.assertEqual(config.options['method'], 'exact')
