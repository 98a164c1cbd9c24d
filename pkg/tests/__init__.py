"""Test suite for Stadia Inspector"""
