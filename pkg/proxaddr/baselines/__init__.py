"""Reference DAD and DHCP allocation, used for comparison only."""
