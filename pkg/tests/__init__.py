"""flowattn test suite.

Tests run on reduced scenes (64x64 images, a 16x16 latent grid, 32
attention channels and a handful of denoising steps) so the whole suite
stays fast; full-resolution runs are marked ``slow``.

Running Tests:
    Run all tests:
        $ pytest

    Skip the full-resolution runs:
        $ pytest -m "not slow"

    Run with coverage:
        $ pytest --cov=src/flowattn --cov-report=html

Test Markers:
    @pytest.mark.unit - Fast, isolated unit tests
    @pytest.mark.integration - End-to-end runs through the CLI
    @pytest.mark.slow - Full-resolution generation

License:
    Apache 2.0
"""
