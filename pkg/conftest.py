"""Lets pytest import the gaitsig package from a plain checkout."""
