#!/usr/bin/env python3
"""
Front-end script for running heatwave from a checkout.
"""

from heatwave.heatwave import main

main()
