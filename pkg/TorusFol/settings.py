"""
Django settings for TorusFol project.

Projekt nie udostępnia widoków ani modeli; Django służy jako szkielet
dla komend zarządzających (`python manage.py run ...`), konfiguracji
przez zmienne środowiskowe i uruchamiania testów.
"""

import os
from pathlib import Path
import environ


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

environ.Env.read_env(os.path.join(BASE_DIR, '.env'))
env = environ.Env(
    DEBUG=(bool, False)
)

# --- Parametry obliczeń ------------------------------------------------------

# minimalny |sin| kąta między liśćmi, poniżej którego para nie jest przyjmowana
TORUS_TRANSVERSALITY_THRESHOLD = env.float('TORUS_TRANSVERSALITY_THRESHOLD', default=0.05)
TORUS_THREADS = env.int('TORUS_THREADS', default=1)
TORUS_DEFAULT_SEED = env.int('TORUS_DEFAULT_SEED', default=0)
TORUS_GRID_RESOLUTION = env.int('TORUS_GRID_RESOLUTION', default=256)
TORUS_LEAF_BUDGET = env.float('TORUS_LEAF_BUDGET', default=2000.0)
TORUS_REPORT_DIR = env('TORUS_REPORT_DIR', default=str(BASE_DIR / 'reports'))

LOG_LEVEL = env('LOG_LEVEL', default='INFO')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('SECRET_KEY', default='torusfol-dev-only-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = env('DEBUG')

ALLOWED_HOSTS = env.list('ALLOWED_HOSTS', default=[])


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'core',
    'circle',
    'foliation',
    'homology',
    'straighten',
    'rigidity',
    'cli',
]

MIDDLEWARE = []


# Database
# Żadna aplikacja nie definiuje modeli; SQLite wystarcza, by Django wystartowało.

DATABASES = {
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
}


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
            'stream': 'ext://sys.stderr',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': env('DJANGO_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        },
    },
}


# Internationalization

LANGUAGE_CODE = env('LANGUAGE_CODE', default='en-us')
TIME_ZONE = env('TIME_ZONE', default='UTC')
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Hypothesis: deterministyczny profil dla `manage.py test`
try:
    from hypothesis import settings as hypothesis_settings
except ImportError:  # środowisko bez zależności testowych
    hypothesis_settings = None
else:
    hypothesis_settings.register_profile('torusfol', derandomize=True, deadline=None)
    hypothesis_settings.load_profile(env('HYPOTHESIS_PROFILE', default='torusfol'))
