from __future__ import annotations

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError, CommandParser

from cli.export import export_grid, import_grid
from core.exceptions import TorusError


class Command(BaseCommand):
    help = (
        "Konwertuje zapisane odwzorowanie siatkowe między formatem binarnym (.tgrd) a CSV. "
        "Format ustalany z rozszerzenia, chyba że podano --from/--to."
    )

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("source", help="Plik wejściowy.")
        parser.add_argument("target", help="Plik wyjściowy (zapis atomowy).")
        parser.add_argument("--from", dest="src_format", choices=["binary", "csv"], default=None)
        parser.add_argument("--to", dest="dst_format", choices=["binary", "csv"], default=None)

    def handle(self, *args, **opts):
        try:
            phi = import_grid(Path(opts["source"]), opts["src_format"])
            path = export_grid(phi, Path(opts["target"]), opts["dst_format"])
        except TorusError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code)
        self.stdout.write(self.style.SUCCESS(
            f"Zapisano {path} (N={phi.resolution}, A={phi.matrix.tolist()}, max|u|={phi.max_displacement():.3g})"
        ))
