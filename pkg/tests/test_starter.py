import json
import os
import tempfile
import unittest
from unittest import mock

from contactkit.api.config import SEED_VARIABLE
from contactkit.starter import EXIT_CONFIG, EXIT_OK, Starter, main


class StarterTestCase(unittest.TestCase):
    def setUp(self):
        self._directory = tempfile.TemporaryDirectory()
        self.addCleanup(self._directory.cleanup)
        self.out = os.path.join(self._directory.name, 'out')

    def test_start_arguments_override_the_config_file(self):
        path = os.path.join(self._directory.name, 'config.json')
        with open(path, 'w') as f:
            json.dump({'model': {'name': 'torus', 'n': 1}, 'seed': 4, 'theta_samples': 32}, f)
        starter = Starter(['invariant', '--config', path, '--k', '1,2', '--seed', '9', '--out', self.out])
        config = starter.build_config()
        self.assertEqual(starter.command, 'invariant')
        self.assertEqual(config.model.name, 'torus')
        self.assertEqual(config.k_list, [1, 2])
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.theta_samples, 32)
        self.assertEqual(config.output.directory, self.out)

    def test_sample_flags(self):
        config = Starter(['verify', '--samples', '7', '--volume-samples', '50']).build_config()
        self.assertEqual((config.samples.identity, config.samples.flow, config.samples.volume), (7, 7, 50))

    def test_dump_trajectories_flag(self):
        self.assertFalse(Starter(['verify']).build_config().output.trajectories)
        self.assertTrue(Starter(['verify', '--dump-trajectories']).build_config().output.trajectories)

    def test_seed_falls_back_to_the_environment(self):
        with mock.patch.dict(os.environ, {SEED_VARIABLE: '17'}):
            self.assertEqual(Starter(['verify']).build_config().seed, 17)

    def test_verify_run_writes_a_report(self):
        argv = ['verify', '--checks', 'liouville,cutoff', '--samples', '3', '--seed', '1', '--out', self.out]
        self.assertEqual(Starter(argv).run(), EXIT_OK)
        with open(os.path.join(self.out, 'report.json')) as f:
            report = json.load(f)
        self.assertTrue(report['all_pass'])
        self.assertEqual(report['command'], 'verify')
        self.assertEqual(report['config']['seed'], 1)
        self.assertEqual([c['name'] for c in report['checks']], ['liouville', 'cutoff'])

    def test_invalid_configuration_writes_nothing(self):
        for extra in (['--tol-identity', '-1'], ['--checks', 'nonsense'], ['--theta-samples', '1']):
            self.assertEqual(main(['verify', '--out', self.out, *extra]), EXIT_CONFIG)
            self.assertFalse(os.path.exists(self.out))

    def test_unreadable_config_file(self):
        self.assertEqual(main(['verify', '--config', os.path.join(self.out, 'missing.json')]), EXIT_CONFIG)

    def test_malformed_arguments(self):
        with self.assertRaises(SystemExit):
            Starter(['verify', '--k', 'one,two'])
        with self.assertRaises(SystemExit):
            Starter(['verify', '--model', 'sphere'])
        with self.assertRaises(SystemExit):
            Starter([])


if __name__ == '__main__':
    unittest.main()
