"""Hydroelastic dynamics of liquid-filled compound shells of revolution."""
