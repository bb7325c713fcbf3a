"""
Тесты конфигурации
"""

import unittest
import os
import sys
import tempfile

import yaml

# Добавляем путь к модулям
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import Config


class TestConfig(unittest.TestCase):
    """Тесты конфигурации"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = os.path.join(self.tmp.name, 'config.yaml')

    def test_defaults_written(self):
        config = Config(self.path)
        self.assertTrue(os.path.exists(self.path))
        self.assertEqual(config.get('tolerances.atol'), 1e-12)
        self.assertEqual(config.get('autodiff.residual_y_order'), 5)
        self.assertEqual(config.get('missing.key', 'default'), 'default')

    def test_partial_file_merged(self):
        with open(self.path, 'w', encoding='utf-8') as f:
            yaml.dump({'tolerances': {'atol': 1e-10}}, f)
        config = Config(self.path)
        self.assertEqual(config.get('tolerances.atol'), 1e-10)
        self.assertEqual(config.get('tolerances.rtol'), 1e-9)
        self.assertEqual(config.get_sampling_config()['workers'], 4)

    def test_override_not_saved(self):
        config = Config(self.path)
        config.override('tolerances.rtol', 1e-6)
        config.override('tolerances.atol', None)
        self.assertEqual(config.get('tolerances.rtol'), 1e-6)
        self.assertEqual(config.get('tolerances.atol'), 1e-12)
        self.assertEqual(Config(self.path).get('tolerances.rtol'), 1e-9)

    def test_set_saved(self):
        config = Config(self.path)
        config.set('output.format', 'json')
        self.assertEqual(Config(self.path).get('output.format'), 'json')


if __name__ == '__main__':
    unittest.main()
