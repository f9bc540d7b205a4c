from __future__ import annotations

import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser

from cli.builders import ObjectRegistry
from cli.serializers import COMMANDS, SEED_LIMIT, RunConfigSerializer
from cli.services import run_command
from core.exceptions import TorusError
from core.utils import atomic_write_text

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_DEGRADED = 4

# ======================= HELPERY =======================

def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed <= SEED_LIMIT:
        raise ValueError(value)
    return seed


def _load_config(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CommandError(f"Nie można odczytać konfiguracji {path}: {exc.strerror or exc}", returncode=EXIT_VALIDATION)
    except json.JSONDecodeError as exc:
        raise CommandError(f"Niepoprawny JSON w {path}: {exc}", returncode=EXIT_VALIDATION)
    s = RunConfigSerializer(data=raw)
    if not s.is_valid():
        errors = json.dumps(s.errors, ensure_ascii=False, default=str)
        raise CommandError(f"Konfiguracja {path} nie przechodzi walidacji: {errors}", returncode=EXIT_VALIDATION)
    return s.validated_data


class Command(BaseCommand):
    help = (
        "Uruchamia jedną komendę (rotnum, cycle, first-return, straighten, verify, rigidity, symmetries) "
        "na obiektach z pliku konfiguracji JSON. Raport JSON trafia na stdout i do katalogu wyjściowego."
    )

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("task", help=f"Komenda: {', '.join(COMMANDS)}.")
        parser.add_argument("--config", required=True, help="Ścieżka do pliku konfiguracji (JSON).")
        parser.add_argument("--out", default=None,
                            help="Katalog na raport i siatki (nadpisuje output.dir; domyślnie TORUS_REPORT_DIR).")
        parser.add_argument("--strict", action="store_true", default=False,
                            help="Flagi jakości kończą się kodem wyjścia 4.")
        parser.add_argument("--seed", type=_seed, default=None, help="Ziarno (U64), nadpisuje seed z konfiguracji.")
        parser.add_argument("--threads", type=int, default=None, help="Liczba wątków, nadpisuje threads z konfiguracji.")

    def handle(self, *args, **opts):
        task: str = opts["task"]
        config_path = Path(opts["config"])
        if opts["threads"] is not None and opts["threads"] < 1:
            raise CommandError("--threads musi być ≥ 1.", returncode=EXIT_VALIDATION)

        config = _load_config(config_path)
        output = config.get("output") or {}
        out_dir = Path(opts["out"] or output.get("dir") or settings.TORUS_REPORT_DIR)

        self.stderr.write(self.style.MIGRATE_HEADING(f"[{task}] konfiguracja: {config_path}"))
        try:
            report = run_command(
                config,
                task,
                registry=ObjectRegistry(config, base_dir=config_path.parent),
                seed=opts["seed"],
                threads=opts["threads"],
                out_dir=out_dir,
            )
        except TorusError as exc:
            logger.error("Komenda %s przerwana: %s", task, exc)
            raise CommandError(str(exc), returncode=exc.exit_code)

        text = report.to_json()
        try:
            target = atomic_write_text(out_dir / f"{task}.json", text + "\n")
        except OSError as exc:
            raise CommandError(f"Nie można zapisać raportu w {out_dir}: {exc.strerror or exc}", returncode=3)
        self.stdout.write(text)

        if report.quality_flags:
            flags = ", ".join(report.quality_flags)
            self.stderr.write(self.style.WARNING(f"Wynik obniżonej jakości: {flags}"))
            if opts["strict"]:
                raise CommandError(f"--strict: flagi jakości ({flags}).", returncode=EXIT_DEGRADED)
        self.stderr.write(self.style.SUCCESS(f"Gotowe: {target} (status {report.status})"))
