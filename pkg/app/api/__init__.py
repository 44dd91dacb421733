# API package