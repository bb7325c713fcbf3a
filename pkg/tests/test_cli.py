"""
Тесты командной строки, отчётов и кодов выхода
"""

import unittest
from contextlib import redirect_stdout
from fractions import Fraction
import io
import json
import os
import sys
import tempfile

import yaml

# Добавляем путь к модулям
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from main import main
from src.cli import RunConfig, parse_args, parse_at, run
from src.config import Config
from src.errors import ConfigError, DimensionMismatch
from src.report_generator import ReportGenerator, dumps


class CliTestCase(unittest.TestCase):
    """Временная директория с конфигурацией и журналом"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config_path = os.path.join(self.tmp.name, 'config.yaml')
        with open(self.config_path, 'w', encoding='utf-8') as f:
            yaml.dump({'logging': {'file': os.path.join(self.tmp.name, 'logs', 'engine.log')},
                       'sampling': {'workers': 2}}, f)
        self.settings = Config(self.config_path)

    def write_metric(self, data) -> str:
        path = os.path.join(self.tmp.name, 'metric.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f)
        return path

    def run_main(self, argv):
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = main(list(argv) + ['--config', self.config_path])
        return code, buffer.getvalue()


class TestParsing(CliTestCase):
    """Тесты разбора аргументов"""

    def test_parse_at(self):
        point = parse_at("x=0,1/2;y=1,-3")
        self.assertEqual(point.x, (Fraction(0), Fraction(1, 2)))
        self.assertEqual(point.y, (Fraction(1), Fraction(-3)))
        with self.assertRaises(ConfigError):
            parse_at("y=1,1")
        with self.assertRaises(ConfigError):
            parse_at("x=0,a;y=1,1")
        with self.assertRaises(DimensionMismatch):
            parse_at("x=0;y=1,1")

    def test_verify_example_positional(self):
        config = parse_args(['verify-example', 'example1-flat-anisotropic', '--backend', 'exact'])
        self.assertEqual(config.builtin, 'example1-flat-anisotropic')
        self.assertEqual(config.backend, 'exact')
        self.assertIsNone(config.seed)

    def test_validation(self):
        invalid = [
            ['compute'],
            ['compute', '--builtin', 'euclidean-fixture'],
            ['classify', '--builtin', 'euclidean-fixture', '--seed', '1'],
            ['compute', '--builtin', 'euclidean-fixture', '--seed', '1', '--samples', '0'],
            ['verify-example', '--metric', 'metric.json'],
            ['unknown-command'],
            ['compute', '--backend', 'symbolic'],
        ]
        for argv in invalid:
            with self.assertRaises(ConfigError, msg=argv):
                parse_args(argv)

    def test_property_option(self):
        config = parse_args(['classify', '--builtin', 'example2-vsi', '--property', 'Berwald', '--seed', '1'])
        self.assertEqual(config.property_name, 'Berwald')
        self.assertNotIn('property', RunConfig.__dataclass_fields__)

    def test_monte_carlo_needs_seed(self):
        config = RunConfig(command='field-residual', builtin='euclidean-fixture',
                           points=[parse_at("x=0,0,0,0;y=1,0,0,0")], r_avg='mc')
        self.assertTrue(config.needs_sampling)
        with self.assertRaises(ConfigError):
            config.validate()


class TestCommands(CliTestCase):
    """Тесты выполнения команд"""

    def test_compute_report_round_trip(self):
        config = RunConfig(command='compute', builtin='euclidean-fixture',
                           points=[parse_at("x=0,0,0,0;y=1,1,0,0")], config_path=self.config_path)
        result = run(config, self.settings)
        self.assertEqual(result.exit_code, 0)
        report = ReportGenerator(self.settings).build(**result.report)
        self.assertEqual(report['verdict'], 'Holds')
        text = dumps(report)
        self.assertEqual(dumps(json.loads(text)), text)
        rows = report['results'][0]['rows']
        F = [row for row in rows if row['object'] == 'F']
        self.assertEqual(len(F), 1)
        self.assertAlmostEqual(F[0]['value'], 2 ** 1.5)

    def test_compute_both_backends(self):
        config = RunConfig(command='compute', builtin='euclidean-fixture', m=Fraction(1), backend='both',
                           points=[parse_at("x=1/2,0,0,0;y=1,1/3,0,2")], config_path=self.config_path)
        result = run(config, self.settings)
        self.assertEqual(result.exit_code, 0)
        titles = [r['title'] for r in result.report['results']]
        self.assertEqual(len(titles), 3)
        self.assertEqual(result.report['results'][-1]['verdict'], 'Holds')

    def test_text_report(self):
        config = RunConfig(command='compute', builtin='sphere-fixture', object='flag',
                           points=[parse_at("x=1/5,0,0;y=1,1,0")], config_path=self.config_path)
        result = run(config, self.settings)
        generator = ReportGenerator(self.settings)
        text = generator.render(generator.build(**result.report), 'text')
        self.assertIn('compute', text)
        self.assertIn('Holds', text)

    def test_field_residual_exit_codes(self):
        flat = RunConfig(command='field-residual', builtin='minkowski-fixture', m=Fraction(2), r_avg='0',
                         points=[parse_at("x=0,0,0,0;y=1/5,1,3/10,-2/5")], config_path=self.config_path)
        self.assertEqual(run(flat, self.settings).exit_code, 0)
        curved = RunConfig(command='field-residual', builtin='sphere-product-fixture',
                           points=[parse_at("x=1/3,-1/4,0,0;y=1/2,1,7/10,-3/10")], config_path=self.config_path)
        result = run(curved, self.settings)
        self.assertEqual(result.exit_code, 1)
        self.assertEqual(result.report['verdict'], 'Fails')
        first = result.report['results'][0]
        self.assertGreater(abs(first['ricci_trace_residual']), 0.1)
        self.assertAlmostEqual(first['ricci_flat_residual'], 0.0, places=9)

    def test_verify_sphere(self):
        config = RunConfig(command='verify-example', builtin='sphere-fixture', config_path=self.config_path)
        result = run(config, self.settings)
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(result.report['results'][0]['kind'], 'flag-curvature')

    def test_verify_vsi(self):
        for backend in ('numeric', 'exact'):
            config = RunConfig(command='verify-example', builtin='example2-vsi', backend=backend,
                               config_path=self.config_path)
            result = run(config, self.settings)
            self.assertEqual(result.exit_code, 0, result.report['results'])
            kinds = [r['kind'] for r in result.report['results']]
            self.assertIn('ricci-value', kinds)
            self.assertTrue(all(r['verdict'] == 'Holds' for r in result.report['results']))

    def test_verify_without_claims(self):
        config = RunConfig(command='verify-example', builtin='sphere-fixture', backend='exact',
                           config_path=self.config_path)
        with self.assertRaises(ConfigError):
            run(config, self.settings)


class TestMain(CliTestCase):
    """Тесты кодов выхода main"""

    def test_c_zero_fails_with_json(self):
        path = self.write_metric({
            'dimension': 2,
            'alpha': [['1', '0'], ['0', '1']],
            'beta': ['1', '0'],
            'family': {'tag': 'm-kropina', 'm': 2, 'c': 0},
        })
        code, out = self.run_main(['compute', '--metric', path, '--at', 'x=0,0;y=1,1'])
        self.assertEqual(code, 2)
        report = json.loads(out)
        self.assertEqual(report['verdict'], 'Fails')
        self.assertEqual(report['error']['type'], 'ConfigError')
        self.assertIn("c = 0 has to be excluded", report['error']['message'])

    def test_bad_arguments(self):
        code, out = self.run_main(['compute', '--builtin', 'euclidean-fixture'])
        self.assertEqual(code, 2)
        self.assertEqual(json.loads(out)['error']['type'], 'ConfigError')

    def test_domain_error_context(self):
        code, out = self.run_main(['compute', '--builtin', 'euclidean-fixture', '--at', 'x=0,0,0,0;y=-1,0,0,1'])
        self.assertEqual(code, 2)
        error = json.loads(out)['error']
        self.assertEqual(error['type'], 'DomainViolation')
        self.assertEqual(error['context']['command'], 'compute')
        self.assertIn('point', error['context'])

    def test_json_output_to_file(self):
        out_path = os.path.join(self.tmp.name, 'reports', 'kropina.json')
        path = self.write_metric({
            'dimension': 2,
            'alpha': [['1', '0'], ['0', '1']],
            'beta': ['1', '0'],
            'family': {'tag': 'kropina'},
        })
        code, _ = self.run_main(['compute', '--metric', path, '--at', 'x=0,0;y=1,1', '--backend', 'exact',
                                 '--output', 'json', '--out', out_path])
        self.assertEqual(code, 0)
        with open(out_path, encoding='utf-8') as f:
            report = json.load(f)
        rows = report['results'][0]['rows']
        F = next(row for row in rows if row['object'] == 'F')
        self.assertEqual(F['value'], 2.0)
        self.assertEqual(F['certificate'], 'Rational')


if __name__ == '__main__':
    unittest.main()
