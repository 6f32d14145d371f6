from .errors import DomainError, GcdLabError
from .primes import PrimeTable, build_prime_table, cached_prime_table

__all__ = ["DomainError", "GcdLabError", "PrimeTable", "build_prime_table", "cached_prime_table"]
