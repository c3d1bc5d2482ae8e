# Majorana simulator tests
