"""
Proxy allocation protocol.

Node roles and state, the message set, and the event handlers that let
unconfigured devices acquire addresses from configured neighbours.
"""
