"""JAX setup shared by circuit composition and gradient code.

Importing this module switches JAX to 64-bit mode; it must happen before any
jax array is created, so every module that touches jax imports it from here.
"""

import jax

jax.config.update("jax_enable_x64", True)

import jax.numpy as jnp  # noqa: E402

__all__ = ["jax", "jnp"]
