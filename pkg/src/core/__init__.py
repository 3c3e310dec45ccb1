"""Autodiff engine, networks, objectives, training and evaluation"""
