"""Balanced sampling in stratified populations with the cube method."""
