namespace ellstr {}
