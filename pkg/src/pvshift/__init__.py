"""Solar-aware household load shifting.

Cleaning of per-second meter data, clear-sky PV forecasting from a week of
history, device power estimation from a single meter, and placement of
device runs into the forecast production envelope to maximize the daily
money balance.
"""

__version__ = "0.1.0"
