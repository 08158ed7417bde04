# shnolkit package initialization
# Spectral experiments for Jacobi operators and their three-term recurrences
