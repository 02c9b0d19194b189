"""Unit test package for eqkernel."""
