"""Byzantine consensus on directed graphs under local broadcast.

Subpackages: graph core (digraph), reachability conditions (conditions),
the phase protocol (flooding, protocol), the round simulator with fault
injection (simulator, adversaries), the impossibility harness (necessity),
and the command-line front end (cli).
"""

__version__ = "0.1.0"
