"""Allow running as `python -m direct_image_lab`."""

from direct_image_lab.cli import cli

cli()
