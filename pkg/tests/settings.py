"""
Settings module used by runtests.py through DIGIHOM_SETTINGS_MODULE.
"""

DIGIHOM = {
    'RUNS': 10,
    'LOG_LEVEL': 'ERROR',
}
