"""
Proxaddr

Proxy-based IPv6 address allocation for SDN-IoT domains, with DAD and DHCP
baselines and a deterministic discrete-event simulator for comparing them.
"""

__version__ = "1.0.0"
