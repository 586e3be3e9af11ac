# Triwell services
