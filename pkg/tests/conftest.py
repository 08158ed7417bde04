"""
Pytest configuration file
"""

import pytest
import tempfile
import json
import os
import sys
from pathlib import Path

# Add src to path for all tests
src_path = Path(__file__).parent.parent / 'src'
sys.path.insert(0, str(src_path))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long reproduction runs (deselected by run_tests.py unless --all)")


@pytest.fixture
def free_model():
    """Free Jacobi operator: a = 1, b = 0, spectrum [0, 4]"""
    from coeffs import builtin
    return builtin('constant', [1.0, 0.0])


@pytest.fixture
def wimp_model():
    from coeffs import builtin
    return builtin('wimp')


@pytest.fixture
def temp_settings():
    """Create temporary tool-wide settings file for testing"""
    settings_content = """
shnolkit:
  log_level: WARNING
  output_dir: results
  threads: 1
  scan:
    residual_rms: 0.1
    beta_cut: 0.001
"""

    with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
        f.write(settings_content)
        settings_path = f.name

    yield settings_path

    # Cleanup
    try:
        os.unlink(settings_path)
    except OSError:
        pass


@pytest.fixture
def experiment_file():
    """Factory writing an experiment document to a temporary JSON file"""
    paths = []

    def write(document) -> str:
        with tempfile.NamedTemporaryFile(mode='w', suffix='.json', delete=False) as f:
            if isinstance(document, str):
                f.write(document)
            else:
                json.dump(document, f)
            paths.append(f.name)
        return f.name

    yield write

    for path in paths:
        try:
            os.unlink(path)
        except OSError:
            pass
