# Middleware module initialization