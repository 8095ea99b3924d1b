#!/usr/bin/env python3
"""Entry point for the isac_* experiment commands."""
import os
import sys


def main() -> None:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "app.settings")
    from django.core.management import execute_from_command_line

    if len(sys.argv) == 1:
        sys.argv.append("help")
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
