# Empty __init__.py to make db a package
