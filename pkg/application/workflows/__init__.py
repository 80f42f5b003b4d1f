# Workflows 
